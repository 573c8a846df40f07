use std::net::{IpAddr, Ipv4Addr, SocketAddr};

use axum::http::HeaderValue;
use clap::Parser;

#[derive(Debug, Parser)]
#[command(name = "toon25-service", version, about = "Local modeling session service")]
struct Args {
    #[arg(long, env = "TOON25_PORT", default_value_t = 8425)]
    port: u16,
    #[arg(long, env = "TOON25_HOST", default_value_t = IpAddr::V4(Ipv4Addr::LOCALHOST))]
    host: IpAddr,
    /// Origin allowed by CORS, e.g. http://localhost:5173. Any origin if unset.
    #[arg(long, env = "TOON25_UI_ORIGIN")]
    ui_origin: Option<String>,
}

#[tokio::main]
async fn main() {
    let args = Args::parse();
    let origin = match args.ui_origin.as_deref().map(HeaderValue::from_str) {
        Some(Ok(v)) => Some(v),
        Some(Err(e)) => {
            eprintln!("error: invalid --ui-origin: {e}");
            std::process::exit(2);
        }
        None => None,
    };
    let addr = SocketAddr::new(args.host, args.port);
    let listener = match tokio::net::TcpListener::bind(addr).await {
        Ok(l) => l,
        Err(e) => {
            eprintln!("error: cannot bind {addr}: {e}");
            std::process::exit(1);
        }
    };
    eprintln!("listening on http://{addr}");
    if let Err(e) = axum::serve(listener, toon25_service::router(origin)).await {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
