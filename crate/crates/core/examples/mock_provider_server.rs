//! Serves the mock provider over TCP and talks to it with the protocol client.
use std::io::BufReader;
use std::net::TcpListener;
use std::time::Duration;

use vocab_free::embedding::cosine_similarity;
use vocab_free::provider::{
    protocol, EmbeddingProvider, Endpoint, MockProvider, ProviderClient, Role,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let listener = TcpListener::bind("127.0.0.1:0")?;
    let addr = listener.local_addr()?;
    std::thread::spawn(move || {
        let mock = MockProvider::new(0);
        for stream in listener.incoming().flatten() {
            let reader = BufReader::new(stream.try_clone().unwrap());
            let _ = protocol::serve(&mock, reader, stream);
        }
    });

    let client =
        ProviderClient::connect(&Endpoint::Tcp(addr.to_string()), Duration::from_secs(10))?;
    println!(
        "connected to {} at {addr}, roles {:?}",
        client.name(),
        client.roles()
    );
    let texts: Vec<String> = [
        "a photo of a cat",
        "a photo of a kitten",
        "a photo of a car",
    ]
    .map(String::from)
    .into();
    let embs = client.embed_texts(Role::JointText, &texts)?;
    for (t, e) in texts.iter().zip(&embs) {
        println!(
            "{t:<22} cos to first = {:.3}",
            cosine_similarity(&embs[0], e)?
        );
    }
    println!("norm corrections so far: {}", client.norm_corrections());
    Ok(())
}
