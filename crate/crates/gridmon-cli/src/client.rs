//! Tiny HTTP/1.1 client for talking to a running gridmon service.

use std::io::{Read, Write};
use std::net::TcpStream;

use anyhow::{bail, Context};

pub struct Response {
    pub status: u16,
    pub body: String,
}

/// Sends one request and reads the full response (the server closes the
/// connection after answering). `server` is `host:port`, with an optional
/// `http://` prefix.
pub fn request(
    server: &str,
    method: &str,
    path_and_query: &str,
    body: Option<&str>,
) -> anyhow::Result<Response> {
    let addr = server
        .trim_start_matches("http://")
        .trim_end_matches('/')
        .to_string();
    let mut stream =
        TcpStream::connect(&addr).with_context(|| format!("cannot connect to {addr}"))?;
    let body = body.unwrap_or("");
    write!(
        stream,
        "{method} {path_and_query} HTTP/1.1\r\nHost: {addr}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len(),
    )?;
    stream.flush()?;

    let mut raw = String::new();
    stream.read_to_string(&mut raw)?;
    let Some((head, payload)) = raw.split_once("\r\n\r\n") else {
        bail!("malformed response from {addr}");
    };
    let status: u16 = head
        .split_whitespace()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .context("malformed status line")?;
    Ok(Response {
        status,
        body: payload.to_string(),
    })
}
