//! Starts the WebSocket server on 127.0.0.1:8765 with the default maze.
//! Connect to ws://127.0.0.1:8765/ws and send control messages.

use pushnav::env::{EnvConfig, EnvKind};
use pushnav_teleop::{serve, ServeConfig};

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = ServeConfig::new("127.0.0.1:8765".parse()?, EnvConfig::defaults_for(EnvKind::Maze));
    println!("listening on ws://{}/ws", config.bind);
    serve(config).await?;
    Ok(())
}
