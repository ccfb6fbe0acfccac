//! Reference embedding servers speaking the provider wire protocols,
//! backed by the deterministic test provider. Useful for smoke-testing a
//! deployment before pointing the pipeline at a real model service.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};

use serde::{Deserialize, Serialize};

use syllabus_skills::embed::TestProvider;

use crate::errors::{data_err, Result};

#[derive(Deserialize)]
struct StdioRequest {
    id: u64,
    texts: Vec<String>,
}

#[derive(Serialize)]
struct StdioResponse {
    id: u64,
    vectors: Vec<Vec<f64>>,
}

/// One JSON object per line on stdin/stdout:
/// `{"id":k,"texts":[...]}` -> `{"id":k,"vectors":[[...]]}`.
pub fn serve_stdio(dim: usize, seed: u64) -> Result<()> {
    let provider = TestProvider::new(dim, seed)?;
    let stdin = std::io::stdin();
    let mut stdout = std::io::stdout().lock();
    for line in stdin.lock().lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let request: StdioRequest =
            serde_json::from_str(&line).map_err(|e| data_err(format!("bad request line: {e}")))?;
        let vectors: Vec<Vec<f64>> = request.texts.iter().map(|t| provider.embed_one(t)).collect();
        let response = StdioResponse {
            id: request.id,
            vectors,
        };
        let json = serde_json::to_string(&response).expect("response serializes");
        writeln!(stdout, "{json}")?;
        stdout.flush()?;
    }
    Ok(())
}

#[derive(Deserialize)]
struct HttpRequestBody {
    texts: Vec<String>,
}

#[derive(Serialize)]
struct HttpResponseBody {
    dim: usize,
    vectors: Vec<Vec<f64>>,
}

/// Minimal HTTP/1.1 server for POST {addr}/embed. Prints the bound
/// address on the first stdout line so callers can bind port 0.
pub fn serve_http(addr: &str, dim: usize, seed: u64) -> Result<()> {
    let provider = TestProvider::new(dim, seed)?;
    let listener = TcpListener::bind(addr)
        .map_err(|e| data_err(format!("cannot bind {addr}: {e}")))?;
    println!("listening http://{}", listener.local_addr()?);
    std::io::stdout().flush()?;
    for stream in listener.incoming() {
        let stream = stream?;
        if let Err(e) = handle_http(stream, &provider, dim) {
            eprintln!("warning: request failed: {}", e.message());
        }
    }
    Ok(())
}

fn handle_http(stream: TcpStream, provider: &TestProvider, dim: usize) -> Result<()> {
    let mut reader = BufReader::new(stream);
    let mut request_line = String::new();
    reader.read_line(&mut request_line)?;
    let mut content_length = 0usize;
    loop {
        let mut header = String::new();
        reader.read_line(&mut header)?;
        let header = header.trim();
        if header.is_empty() {
            break;
        }
        if let Some(value) = header
            .to_ascii_lowercase()
            .strip_prefix("content-length:")
            .map(str::trim)
            .map(str::to_string)
        {
            content_length = value.parse().unwrap_or(0);
        }
    }
    let mut body = vec![0u8; content_length];
    reader.read_exact(&mut body)?;
    let mut stream = reader.into_inner();

    let is_embed = request_line.starts_with("POST") && request_line.contains("/embed");
    if !is_embed {
        let response = "HTTP/1.1 404 Not Found\r\ncontent-length: 0\r\nconnection: close\r\n\r\n";
        stream.write_all(response.as_bytes())?;
        return Ok(());
    }
    let parsed: HttpRequestBody =
        serde_json::from_slice(&body).map_err(|e| data_err(format!("bad body: {e}")))?;
    let vectors: Vec<Vec<f64>> = parsed.texts.iter().map(|t| provider.embed_one(t)).collect();
    let payload = serde_json::to_string(&HttpResponseBody { dim, vectors }).expect("serializes");
    let response = format!(
        "HTTP/1.1 200 OK\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{payload}",
        payload.len()
    );
    stream.write_all(response.as_bytes())?;
    Ok(())
}
