// SPDX-License-Identifier: Apache-2.0

use std::net::SocketAddr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Duration;

use tokio::io::{AsyncReadExt, AsyncWriteExt};
use tokio::net::tcp::{OwnedReadHalf, OwnedWriteHalf};
use tokio::net::{TcpListener, TcpStream};
use tokio::sync::mpsc;
use tokio::task::JoinHandle;
use tokio::time::Instant;

use crate::NetworkProfile;

/// Burst allowance of each direction's token bucket, in bytes.
pub const BUCKET_BYTES: usize = 64 * 1024;
const CHUNK: usize = 16 * 1024;

/// Byte counters over all connections of a proxy.
#[derive(Debug, Default)]
pub struct ProxyStats {
    up_bytes: AtomicU64,
    down_bytes: AtomicU64,
    connections: AtomicU64,
}

impl ProxyStats {
    pub fn up_bytes(&self) -> u64 {
        self.up_bytes.load(Ordering::SeqCst)
    }

    pub fn down_bytes(&self) -> u64 {
        self.down_bytes.load(Ordering::SeqCst)
    }

    pub fn connections(&self) -> u64 {
        self.connections.load(Ordering::SeqCst)
    }
}

/// Paces a byte stream at `rate` bytes/s. Starts full; a take may overdraw,
/// in which case the caller waits until the debt is repaid.
#[derive(Debug)]
pub struct TokenBucket {
    rate: f64,
    capacity: f64,
    tokens: f64,
    last: Instant,
}

impl TokenBucket {
    pub fn new(bits_per_second: u64, capacity_bytes: usize) -> Self {
        let capacity = capacity_bytes as f64;
        Self { rate: bits_per_second as f64 / 8.0, capacity, tokens: capacity, last: Instant::now() }
    }

    /// Withdraws `n` bytes at `now` and returns how long to wait before
    /// sending them.
    pub fn take_at(&mut self, n: usize, now: Instant) -> Duration {
        let elapsed = now.saturating_duration_since(self.last).as_secs_f64();
        self.tokens = (self.tokens + elapsed * self.rate).min(self.capacity);
        self.last = now;
        self.tokens -= n as f64;
        if self.tokens < 0.0 {
            Duration::from_secs_f64(-self.tokens / self.rate)
        } else {
            Duration::ZERO
        }
    }
}

/// TCP forwarder that shapes each connection to a [`NetworkProfile`].
///
/// Opening the upstream connection costs one RTT, standing in for the
/// handshake a real network would add. After that, bytes are paced per
/// direction by a [`BUCKET_BYTES`] token bucket and delivered `rtt / 2`
/// after they clear it. A request/response exchange therefore pays about
/// `2 * rtt` plus serialization time.
pub struct ShapedProxy {
    addr: SocketAddr,
    stats: Arc<ProxyStats>,
    accept: JoinHandle<()>,
}

impl ShapedProxy {
    pub async fn start(profile: NetworkProfile, upstream: SocketAddr) -> std::io::Result<Self> {
        let listener = TcpListener::bind("127.0.0.1:0").await?;
        let addr = listener.local_addr()?;
        let stats = Arc::new(ProxyStats::default());
        let shared = stats.clone();
        let profile = Arc::new(profile);
        let accept = tokio::spawn(async move {
            loop {
                let Ok((client, _)) = listener.accept().await else { continue };
                shared.connections.fetch_add(1, Ordering::SeqCst);
                tokio::spawn(relay(client, upstream, profile.clone(), shared.clone()));
            }
        });
        Ok(Self { addr, stats, accept })
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub fn stats(&self) -> &ProxyStats {
        &self.stats
    }
}

impl Drop for ShapedProxy {
    fn drop(&mut self) {
        self.accept.abort();
    }
}

async fn relay(client: TcpStream, upstream: SocketAddr, profile: Arc<NetworkProfile>, stats: Arc<ProxyStats>) {
    tokio::time::sleep(profile.rtt()).await;
    let server = match TcpStream::connect(upstream).await {
        Ok(s) => s,
        Err(e) => {
            // dropping the client socket is how the refusal reaches the caller
            tracing::debug!(%upstream, error = %e, "upstream refused");
            return;
        }
    };
    let _ = client.set_nodelay(true);
    let _ = server.set_nodelay(true);
    let half_rtt = profile.rtt() / 2;
    let (cr, cw) = client.into_split();
    let (sr, sw) = server.into_split();
    tokio::join!(
        pump(cr, sw, profile.up_bps, half_rtt, &stats.up_bytes),
        pump(sr, cw, profile.down_bps, half_rtt, &stats.down_bytes),
    );
}

async fn pump(mut src: OwnedReadHalf, mut dst: OwnedWriteHalf, bps: u64, delay: Duration, counter: &AtomicU64) {
    let (tx, mut rx) = mpsc::unbounded_channel::<(Instant, Vec<u8>)>();
    let reader = async move {
        let mut bucket = TokenBucket::new(bps, BUCKET_BYTES);
        let mut buf = vec![0u8; CHUNK];
        loop {
            let n = match src.read(&mut buf).await {
                Ok(0) | Err(_) => break,
                Ok(n) => n,
            };
            let wait = bucket.take_at(n, Instant::now());
            if !wait.is_zero() {
                tokio::time::sleep(wait).await;
            }
            counter.fetch_add(n as u64, Ordering::SeqCst);
            if tx.send((Instant::now() + delay, buf[..n].to_vec())).is_err() {
                break;
            }
        }
    };
    let writer = async move {
        while let Some((at, data)) = rx.recv().await {
            if at > Instant::now() {
                tokio::time::sleep_until(at).await;
            }
            if dst.write_all(&data).await.is_err() {
                break;
            }
        }
        let _ = dst.shutdown().await;
    };
    tokio::join!(reader, writer);
}

/// Uploads `bytes` through a proxy shaped to `profile` into a local sink
/// and returns the time until the sink acknowledges the last byte.
pub async fn timed_upload(profile: NetworkProfile, bytes: usize) -> std::io::Result<Duration> {
    let sink = TcpListener::bind("127.0.0.1:0").await?;
    let sink_addr = sink.local_addr()?;
    let receiver = tokio::spawn(async move {
        let (mut s, _) = sink.accept().await?;
        let mut total = 0usize;
        let mut buf = vec![0u8; 64 * 1024];
        loop {
            match s.read(&mut buf).await? {
                0 => break,
                n => total += n,
            }
        }
        s.write_all(&[1]).await?;
        s.shutdown().await?;
        Ok::<usize, std::io::Error>(total)
    });
    let proxy = ShapedProxy::start(profile, sink_addr).await?;
    let payload = vec![0xA5u8; bytes];
    let started = Instant::now();
    let mut conn = TcpStream::connect(proxy.addr()).await?;
    conn.write_all(&payload).await?;
    conn.shutdown().await?;
    let mut ack = [0u8; 1];
    conn.read_exact(&mut ack).await?;
    let elapsed = started.elapsed();
    let received = receiver.await.map_err(std::io::Error::other)??;
    if received != bytes {
        return Err(std::io::Error::other(format!("sink received {received} of {bytes} bytes")));
    }
    Ok(elapsed)
}
