//! Shared test helpers: a brute-force least-squares oracle and a minimal
//! HTTP server speaking the embedding protocol.
#![allow(dead_code, clippy::needless_range_loop)]

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;

use serde_json::{json, Value};

/// Solves the normal equations `X'X b = X'y` by Gaussian elimination with
/// partial pivoting. Independent of the QR code under test.
pub fn normal_equations(columns: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let p = columns.len();
    let mut a = vec![vec![0.0; p + 1]; p];
    for i in 0..p {
        for j in 0..p {
            a[i][j] = columns[i].iter().zip(&columns[j]).map(|(x, z)| x * z).sum();
        }
        a[i][p] = columns[i].iter().zip(y).map(|(x, z)| x * z).sum();
    }
    for k in 0..p {
        let pivot = (k..p)
            .max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs()))
            .unwrap();
        a.swap(k, pivot);
        for i in k + 1..p {
            let f = a[i][k] / a[k][k];
            for j in k..=p {
                a[i][j] -= f * a[k][j];
            }
        }
    }
    let mut b = vec![0.0; p];
    for i in (0..p).rev() {
        let s: f64 = (i + 1..p).map(|j| a[i][j] * b[j]).sum();
        b[i] = (a[i][p] - s) / a[i][i];
    }
    b
}

pub fn correlation(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}

/// What the mock server answers for one request, given the request count so
/// far (0-based) and the texts.
pub type Handler = dyn Fn(usize, &[String]) -> (u16, String) + Send + Sync;

pub struct MockServer {
    pub url: String,
    requests: Arc<AtomicUsize>,
    pub bodies: Arc<Mutex<Vec<Value>>>,
    stop: Arc<AtomicBool>,
    handle: Option<JoinHandle<()>>,
    addr: std::net::SocketAddr,
}

/// Deterministic vector for a text: character statistics, never zero.
pub fn fake_vector(text: &str, dim: usize) -> Vec<f64> {
    let mut v = vec![1.0; dim];
    for (i, b) in text.bytes().enumerate() {
        v[(i * 7 + b as usize) % dim] += f64::from(b) / 100.0;
    }
    v
}

pub fn ok_vectors(texts: &[String], dim: usize) -> (u16, String) {
    let vectors: Vec<Vec<f64>> = texts.iter().map(|t| fake_vector(t, dim)).collect();
    (200, json!({ "vectors": vectors }).to_string())
}

impl MockServer {
    pub fn start(handler: impl Fn(usize, &[String]) -> (u16, String) + Send + Sync + 'static) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let requests = Arc::new(AtomicUsize::new(0));
        let bodies = Arc::new(Mutex::new(Vec::new()));
        let stop = Arc::new(AtomicBool::new(false));
        let handler: Arc<Handler> = Arc::new(handler);
        let handle = {
            let (requests, bodies, stop) = (requests.clone(), bodies.clone(), stop.clone());
            std::thread::spawn(move || {
                for stream in listener.incoming() {
                    if stop.load(Ordering::SeqCst) {
                        break;
                    }
                    let Ok(stream) = stream else { continue };
                    serve(stream, &requests, &bodies, handler.as_ref());
                }
            })
        };
        MockServer {
            url: format!("http://{addr}"),
            requests,
            bodies,
            stop,
            handle: Some(handle),
            addr,
        }
    }

    pub fn requests(&self) -> usize {
        self.requests.load(Ordering::SeqCst)
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        // Wake the accept loop.
        let _ = TcpStream::connect(self.addr);
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

fn serve(stream: TcpStream, requests: &AtomicUsize, bodies: &Mutex<Vec<Value>>, handler: &Handler) {
    let mut reader = BufReader::new(stream.try_clone().unwrap());
    let mut request_line = String::new();
    if reader.read_line(&mut request_line).unwrap_or(0) == 0 {
        return;
    }
    let mut content_length = 0usize;
    loop {
        let mut line = String::new();
        if reader.read_line(&mut line).unwrap_or(0) == 0 {
            return;
        }
        let line = line.trim_end();
        if line.is_empty() {
            break;
        }
        if let Some((k, v)) = line.split_once(':') {
            if k.eq_ignore_ascii_case("content-length") {
                content_length = v.trim().parse().unwrap_or(0);
            }
        }
    }
    let mut body = vec![0u8; content_length];
    if reader.read_exact(&mut body).is_err() {
        return;
    }
    let n = requests.fetch_add(1, Ordering::SeqCst);

    let (status, response) = if !request_line.starts_with("POST /embed ") {
        (404, json!({"error": "not found"}).to_string())
    } else {
        match serde_json::from_slice::<Value>(&body) {
            Ok(v) => {
                let texts: Vec<String> = v["texts"]
                    .as_array()
                    .map(|a| a.iter().filter_map(|t| t.as_str().map(String::from)).collect())
                    .unwrap_or_default();
                bodies.lock().unwrap().push(v);
                handler(n, &texts)
            }
            Err(_) => (400, json!({"error": "bad json"}).to_string()),
        }
    };
    let mut stream = stream;
    let _ = write!(
        stream,
        "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{response}",
        response.len()
    );
    let _ = stream.flush();
}
