//! Fits latency and inverse bandwidth of a transport from ping-pong
//! exchanges between two endpoints.

use std::thread;
use std::time::Instant;

use serde::Serialize;

use treelet_core::codec::encode_meta;
use treelet_core::HockneyParams;

use crate::error::{Error, Result};
use crate::runner::TransportKind;
use crate::transport::{inproc_mesh, local_socket_mesh, Transport};

pub const DEFAULT_FIT_SIZES: [usize; 6] = [0, 4 << 10, 32 << 10, 128 << 10, 512 << 10, 2 << 20];
pub const DEFAULT_HELD_OUT: usize = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sample {
    pub bytes: usize,
    /// Median one-way time in seconds.
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HockneyFit {
    pub alpha: f64,
    pub beta: f64,
    pub samples: Vec<Sample>,
    pub held_out: Sample,
    pub held_out_predicted: f64,
    /// `|predicted - measured| / measured` on the held-out size.
    pub held_out_error: f64,
}

impl HockneyFit {
    pub fn params(&self) -> Result<HockneyParams> {
        Ok(HockneyParams::new(self.alpha, self.beta)?)
    }
}

/// Least squares `t = alpha + beta * b` on relative residuals, so small
/// payloads weigh as much as large ones. Clamped to `alpha >= 0` and
/// `beta > 0`.
pub fn fit_line(samples: &[Sample]) -> Result<(f64, f64)> {
    if samples.len() < 2 {
        return Err(Error::Config("a fit needs at least two payload sizes".into()));
    }
    if samples.iter().all(|s| s.bytes == samples[0].bytes) {
        return Err(Error::Config("payload sizes must differ".into()));
    }
    // Minimizes sum w (alpha + beta b - t)^2 with w = 1 / t^2.
    let (mut sw, mut sb, mut sbb, mut st, mut sbt) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for s in samples {
        let w = 1.0 / s.seconds.max(f64::MIN_POSITIVE).powi(2);
        let b = s.bytes as f64;
        sw += w;
        sb += w * b;
        sbb += w * b * b;
        st += w * s.seconds;
        sbt += w * b * s.seconds;
    }
    let det = sw * sbb - sb * sb;
    let (alpha, beta) = ((st * sbb - sb * sbt) / det, (sw * sbt - sb * st) / det);
    if alpha >= 0.0 && beta > 0.0 {
        return Ok((alpha, beta));
    }
    // Refit the free parameter with the other one held at its bound.
    if alpha < 0.0 {
        Ok((0.0, (sbt / sbb).max(f64::MIN_POSITIVE)))
    } else {
        Ok(((st / sw).max(0.0), f64::MIN_POSITIVE))
    }
}

/// Median one-way time of `reps` round trips of `bytes` between rank 0 and
/// rank 1 of `pair`. Payloads are freshly built on every send.
pub fn ping_pong<T: Transport + 'static>(pair: Vec<T>, sizes: &[usize], reps: usize) -> Result<Vec<Sample>> {
    let mut eps = pair.into_iter();
    let (Some(mut a), Some(mut b)) = (eps.next(), eps.next()) else {
        return Err(Error::Config("ping-pong needs two endpoints".into()));
    };
    let rounds = sizes.len() * (reps + 1);
    let echo = thread::spawn(move || -> Result<()> {
        let meta = encode_meta(1, 0, 0)?;
        for _ in 0..rounds {
            let (_, payload) = b.recv(0)?;
            b.send(0, meta, vec![0xa5u8; payload.len()])?;
        }
        Ok(())
    });
    let meta = encode_meta(0, 1, 0)?;
    let mut samples = Vec::with_capacity(sizes.len());
    for &bytes in sizes {
        let mut times = Vec::with_capacity(reps);
        // One warm-up round per size.
        for round in 0..=reps {
            let start = Instant::now();
            a.send(1, meta, vec![0xa5u8; bytes])?;
            let (_, back) = a.recv(1)?;
            if back.len() != bytes {
                return Err(Error::Transport("echo changed the payload size".into()));
            }
            if round > 0 {
                times.push(start.elapsed().as_secs_f64() / 2.0);
            }
        }
        times.sort_by(f64::total_cmp);
        samples.push(Sample {
            bytes,
            seconds: times[times.len() / 2],
        });
    }
    echo.join().map_err(|_| Error::Transport("echo thread panicked".into()))??;
    Ok(samples)
}

pub fn fit_hockney(kind: TransportKind, sizes: &[usize], held_out: usize, reps: usize) -> Result<HockneyFit> {
    if sizes.len() < 5 {
        return Err(Error::Config("fit at least five payload sizes".into()));
    }
    let mut all: Vec<usize> = sizes.to_vec();
    all.push(held_out);
    let measured = match kind {
        TransportKind::Inproc => ping_pong(inproc_mesh(2), &all, reps.max(1))?,
        TransportKind::Socket => ping_pong(local_socket_mesh(2)?, &all, reps.max(1))?,
    };
    let (fit, last) = measured.split_at(sizes.len());
    let (alpha, beta) = fit_line(fit)?;
    let held = last[0];
    let predicted = alpha + beta * held.bytes as f64;
    Ok(HockneyFit {
        alpha,
        beta,
        samples: fit.to_vec(),
        held_out: held,
        held_out_predicted: predicted,
        held_out_error: (predicted - held.seconds).abs() / held.seconds.max(f64::MIN_POSITIVE),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line_is_recovered() {
        let samples: Vec<Sample> = [0, 10, 20, 40]
            .iter()
            .map(|&b| Sample {
                bytes: b,
                seconds: 2e-6 + 1e-9 * b as f64,
            })
            .collect();
        let (a, b) = fit_line(&samples).unwrap();
        assert!((a - 2e-6).abs() < 1e-15 && (b - 1e-9).abs() < 1e-18);
    }

    #[test]
    fn flat_times_keep_beta_positive() {
        let samples = [Sample { bytes: 0, seconds: 1.0 }, Sample { bytes: 8, seconds: 0.5 }];
        let (a, b) = fit_line(&samples).unwrap();
        assert!(b > 0.0 && a >= 0.0);
        assert!(fit_line(&samples[..1]).is_err());
    }

    #[test]
    fn small_payloads_are_not_swamped_by_large_ones() {
        // A line through the small sizes with one slow outlier at the top.
        let mut samples: Vec<Sample> = [0, 1000, 2000, 4000]
            .iter()
            .map(|&b| Sample {
                bytes: b,
                seconds: 1e-5 + 1e-9 * b as f64,
            })
            .collect();
        samples.push(Sample {
            bytes: 1_000_000,
            seconds: 3e-3,
        });
        let (a, _) = fit_line(&samples).unwrap();
        assert!((a - 1e-5).abs() < 2e-6, "{a}");
    }

    #[test]
    fn inproc_fit_runs() {
        let fit = fit_hockney(TransportKind::Inproc, &[0, 1024, 4096, 16384, 65536], 32768, 5).unwrap();
        assert!(fit.params().is_ok());
        assert_eq!(fit.samples.len(), 5);
    }
}
