//! Packet streams and the operations that manipulate them.
//!
//! A [`PacketStream`] is a strictly increasing sequence of arrival
//! timestamps, each tagged with its source. Arrival times are the partial
//! sums of i.i.d. IPD draws; the first IPD is measured from `t = 0` (the
//! renewal process is ordinary, not delayed).

use serde::{Deserialize, Serialize};

use super::dist::IpdDistribution;
use crate::error::{Error, Result};
use crate::seed;

/// Who emitted a packet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Jack,
    Alice,
}

impl std::fmt::Display for Source {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Source::Jack => write!(f, "jack"),
            Source::Alice => write!(f, "alice"),
        }
    }
}

/// One packet arrival.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Packet {
    /// Arrival time in seconds, strictly positive.
    pub time: f64,
    pub source: Source,
}

/// Stopping rule for stream generation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StopRule {
    /// Generate arrivals in `(0, t]`; the next draw would land beyond `t`.
    Horizon(f64),
    /// Generate exactly this many arrivals.
    Count(usize),
}

/// A strictly increasing sequence of tagged arrival timestamps.
///
/// `horizon` records the interval `[0, horizon]` over which the arrival list
/// is known to be complete; it is `None` for count-mode streams, whose
/// coverage ends at the last arrival.
#[derive(Debug, Clone, PartialEq)]
pub struct PacketStream {
    packets: Vec<Packet>,
    horizon: Option<f64>,
}

impl PacketStream {
    /// Builds a stream from packets, validating order and positivity.
    pub fn new(packets: Vec<Packet>, horizon: Option<f64>) -> Result<Self> {
        let mut prev = 0.0;
        for (i, p) in packets.iter().enumerate() {
            if !p.time.is_finite() || p.time <= prev {
                return Err(Error::UnorderedStream {
                    index: i,
                    detail: format!("timestamp {} after {}", p.time, prev),
                });
            }
            prev = p.time;
        }
        if let Some(t) = horizon {
            if !t.is_finite() || t < prev {
                return Err(Error::InvalidParameter(format!(
                    "horizon {t} precedes last arrival {prev}"
                )));
            }
        }
        Ok(PacketStream { packets, horizon })
    }

    /// Builds a stream from already-sorted packets without re-validating.
    ///
    /// Used by `merge_streams`, whose output is sorted by construction but
    /// may contain an exact timestamp tie (a measure-zero event under the
    /// continuous laws in scope).
    pub(crate) fn from_sorted_unchecked(packets: Vec<Packet>, horizon: Option<f64>) -> Self {
        debug_assert!(packets.windows(2).all(|w| w[0].time <= w[1].time));
        PacketStream { packets, horizon }
    }

    /// Builds a single-source stream from timestamps.
    pub fn from_times(times: &[f64], source: Source, horizon: Option<f64>) -> Result<Self> {
        let packets = times.iter().map(|&t| Packet { time: t, source }).collect();
        PacketStream::new(packets, horizon)
    }

    /// Rebuilds a single-source stream from IPDs (inverse of
    /// [`extract_ipds`]).
    pub fn from_ipds(ipds: &[f64], source: Source) -> Result<Self> {
        let mut t = 0.0;
        let mut packets = Vec::with_capacity(ipds.len());
        for (i, &a) in ipds.iter().enumerate() {
            if !a.is_finite() || a <= 0.0 {
                return Err(Error::UnorderedStream {
                    index: i,
                    detail: format!("non-positive IPD {a}"),
                });
            }
            t += a;
            packets.push(Packet { time: t, source });
        }
        Ok(PacketStream {
            packets,
            horizon: None,
        })
    }

    pub fn packets(&self) -> &[Packet] {
        &self.packets
    }

    pub fn len(&self) -> usize {
        self.packets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.packets.is_empty()
    }

    pub fn horizon(&self) -> Option<f64> {
        self.horizon
    }

    /// Arrival time of the 1-based `i`-th packet.
    pub fn arrival(&self, i: usize) -> Option<f64> {
        if i == 0 {
            None
        } else {
            self.packets.get(i - 1).map(|p| p.time)
        }
    }

    pub fn last_time(&self) -> Option<f64> {
        self.packets.last().map(|p| p.time)
    }

    /// Returns a copy with every packet tagged `source`.
    pub fn with_source(&self, source: Source) -> PacketStream {
        PacketStream {
            packets: self
                .packets
                .iter()
                .map(|p| Packet {
                    time: p.time,
                    source,
                })
                .collect(),
            horizon: self.horizon,
        }
    }

    /// Returns the sub-stream of packets from one source, keeping times.
    pub fn filter_source(&self, source: Source) -> PacketStream {
        PacketStream {
            packets: self
                .packets
                .iter()
                .copied()
                .filter(|p| p.source == source)
                .collect(),
            horizon: self.horizon,
        }
    }

    /// True when the arrival list is known complete on `[0, t]`, either
    /// because the generation horizon covers `t` or because an arrival at or
    /// beyond `t` bounds the count from above.
    pub fn covers(&self, t: f64) -> bool {
        if let Some(h) = self.horizon {
            if h >= t {
                return true;
            }
        }
        self.last_time().is_some_and(|last| last >= t)
    }
}

/// Samples a renewal stream of Jack-tagged packets.
///
/// Arrival `i` is the partial sum of `i` i.i.d. draws from `dist`. In
/// horizon mode the last arrival is `<= t` and the next draw would exceed
/// `t`. Deterministic for a fixed seed; a horizon-mode stream is a prefix of
/// the count-mode stream drawn with the same seed.
pub fn sample_stream(dist: &IpdDistribution, stop: StopRule, seed: u64) -> Result<PacketStream> {
    dist.validate()?;
    let sampler = dist.sampler()?;
    let mut rng = seed::rng(seed);
    match stop {
        StopRule::Horizon(t) => {
            if !t.is_finite() || t <= 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "horizon must be positive, got {t}"
                )));
            }
            // Reserve for the expected count, with slack.
            let expect = (t / dist.mean()) as usize;
            let mut packets = Vec::with_capacity(expect + expect / 8 + 16);
            let mut sum = 0.0;
            loop {
                let x = sampler.sample(&mut rng);
                if sum + x > t {
                    break;
                }
                sum += x;
                packets.push(Packet {
                    time: sum,
                    source: Source::Jack,
                });
            }
            Ok(PacketStream {
                packets,
                horizon: Some(t),
            })
        }
        StopRule::Count(n) => {
            let mut packets = Vec::with_capacity(n);
            let mut sum = 0.0;
            for _ in 0..n {
                sum += sampler.sample(&mut rng);
                packets.push(Packet {
                    time: sum,
                    source: Source::Jack,
                });
            }
            Ok(PacketStream {
                packets,
                horizon: None,
            })
        }
    }
}

/// Appends `extra` further arrivals drawn from `dist`, continuing the
/// partial sums past the current last arrival. Used when a count-mode
/// stream turns out too short for a downstream construction.
pub fn extend_stream(
    stream: &mut PacketStream,
    dist: &IpdDistribution,
    extra: usize,
    seed: u64,
) -> Result<()> {
    let sampler = dist.sampler()?;
    let mut rng = seed::rng(seed);
    let source = stream.packets.last().map_or(Source::Jack, |p| p.source);
    let mut sum = stream.last_time().unwrap_or(0.0);
    for _ in 0..extra {
        sum += sampler.sample(&mut rng);
        stream.packets.push(Packet { time: sum, source });
    }
    if let Some(h) = stream.horizon {
        // Coverage now extends to the new last arrival.
        stream.horizon = Some(h.max(sum));
    }
    Ok(())
}

/// Number of arrivals in `[0, t]`.
///
/// The counting process satisfies `count_arrivals(s, t) >= i` iff
/// `arrival(i) <= t`.
pub fn count_arrivals(stream: &PacketStream, t: f64) -> Result<usize> {
    if t.is_nan() || t < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "count time must be nonnegative, got {t}"
        )));
    }
    Ok(stream.packets.partition_point(|p| p.time <= t))
}

/// IPD sequence of a stream: first element is the first timestamp, element
/// `i > 1` is `arrival(i) - arrival(i-1)`.
pub fn extract_ipds(stream: &PacketStream) -> Result<Vec<f64>> {
    if stream.is_empty() {
        return Err(Error::EmptyStream);
    }
    let mut prev = 0.0;
    let ipds = stream
        .packets
        .iter()
        .map(|p| {
            let d = p.time - prev;
            prev = p.time;
            d
        })
        .collect();
    Ok(ipds)
}

/// Multiplies every timestamp by `factor`, preserving order and tags.
///
/// If the input IPDs follow `p(x)` and `factor = 1/(1-rho)`, the output
/// IPDs follow the scaled density `(1-rho) * p((1-rho) x)`.
pub fn scale_stream(stream: &PacketStream, factor: f64) -> Result<PacketStream> {
    if !factor.is_finite() || factor <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "scale factor must be positive, got {factor}"
        )));
    }
    Ok(PacketStream {
        packets: stream
            .packets
            .iter()
            .map(|p| Packet {
                time: p.time * factor,
                source: p.source,
            })
            .collect(),
        horizon: stream.horizon.map(|h| h * factor),
    })
}

/// Superposition of two streams: the sorted union, preserving source tags.
///
/// Exact timestamp ties (measure-zero under the continuous laws in scope)
/// are ordered Jack before Alice, deterministically.
pub fn merge_streams(a: &PacketStream, b: &PacketStream) -> PacketStream {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    let (pa, pb) = (&a.packets, &b.packets);
    while i < pa.len() && j < pb.len() {
        let x = pa[i];
        let y = pb[j];
        let take_a = match x.time.partial_cmp(&y.time).expect("finite timestamps") {
            std::cmp::Ordering::Less => true,
            std::cmp::Ordering::Greater => false,
            std::cmp::Ordering::Equal => !(x.source == Source::Alice && y.source == Source::Jack),
        };
        if take_a {
            out.push(x);
            i += 1;
        } else {
            out.push(y);
            j += 1;
        }
    }
    out.extend_from_slice(&pa[i..]);
    out.extend_from_slice(&pb[j..]);
    let horizon = match (a.horizon, b.horizon) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (h, None) | (None, h) => h,
    };
    PacketStream::from_sorted_unchecked(out, horizon)
}
