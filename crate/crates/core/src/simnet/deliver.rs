//! One packet per path, moved hop by hop through a discrete-event queue.
//! Each hop costs the edge latency plus up to 10% uniform jitter, so packets
//! may arrive out of send order.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::Serialize;

use super::{Path, SimError, Topology};
use crate::pipeline::DEFAULT_ATTACK_BUDGET;

/// Packet bytes before this offset hold the magic, version, mode and
/// sequence number. A modifying adversary flips bits after it, where the
/// receiver's only defence is the MAC.
const MODIFY_FROM: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Behavior {
    Eavesdrop,
    Modify,
    Drop,
}

impl fmt::Display for Behavior {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Behavior::Eavesdrop => "eavesdrop",
            Behavior::Modify => "modify",
            Behavior::Drop => "drop",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdversaryModel {
    /// Indices into the chosen path list.
    pub compromised: Vec<usize>,
    pub behavior: Behavior,
    pub knows_p: bool,
    /// Candidate arrangements the attacker may test.
    pub budget: u64,
}

impl AdversaryModel {
    pub fn none() -> Self {
        Self {
            compromised: Vec::new(),
            behavior: Behavior::Eavesdrop,
            knows_p: false,
            budget: DEFAULT_ATTACK_BUDGET,
        }
    }

    pub fn new(behavior: Behavior, compromised: Vec<usize>) -> Self {
        Self {
            compromised,
            behavior,
            ..Self::none()
        }
    }

    pub fn with_knows_p(mut self, knows_p: bool) -> Self {
        self.knows_p = knows_p;
        self
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = budget;
        self
    }

    pub fn is_compromised(&self, path: usize) -> bool {
        self.compromised.contains(&path)
    }
}

/// `eavesdrop:0,2`, `modify:1`, `drop:3` or `none`.
impl FromStr for AdversaryModel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "none" {
            return Ok(Self::none());
        }
        let (kind, list) = s
            .split_once(':')
            .ok_or_else(|| format!("adversary {s:?} is not BEHAVIOR:IDX[,IDX..]"))?;
        let behavior = match kind {
            "eavesdrop" => Behavior::Eavesdrop,
            "modify" => Behavior::Modify,
            "drop" => Behavior::Drop,
            other => return Err(format!("unknown adversary behavior {other:?}")),
        };
        let mut compromised = Vec::new();
        for part in list.split(',') {
            let idx: usize = part
                .trim()
                .parse()
                .map_err(|_| format!("path index {part:?} is not a number"))?;
            if compromised.contains(&idx) {
                return Err(format!("path index {idx} listed twice"));
            }
            compromised.push(idx);
        }
        Ok(Self::new(behavior, compromised))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Disposition {
    Delivered,
    CapturedAndDelivered,
    CorruptedAndDelivered,
    Dropped,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Arrival {
    pub path: usize,
    pub at_us: u64,
    pub bytes: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Delivery {
    /// In arrival order.
    pub received: Vec<Arrival>,
    /// Everything the adversary saw, in path order.
    pub captured: Vec<Vec<u8>>,
    /// Indexed by path.
    pub dispositions: Vec<Disposition>,
}

impl Delivery {
    pub fn received_bytes(&self) -> Vec<&[u8]> {
        self.received.iter().map(|a| a.bytes.as_slice()).collect()
    }

    /// Simulated time of the last arrival.
    pub fn last_arrival_us(&self) -> u64 {
        self.received.iter().map(|a| a.at_us).max().unwrap_or(0)
    }
}

fn hop_us(latency_ms: f64, rng: &mut impl Rng) -> u64 {
    let base = (latency_ms * 1000.0).round() as u64;
    base + rng.gen_range(0..=base / 10)
}

/// Sends `packets[k]` along `paths[k]`. A compromised path hands the adversary
/// a copy of what it carries before acting on it.
pub fn deliver<R: Rng>(
    topology: &Topology,
    paths: &[Path],
    packets: &[Vec<u8>],
    adversary: &AdversaryModel,
    rng: &mut R,
) -> Result<Delivery, SimError> {
    if paths.len() != packets.len() {
        return Err(SimError::ArityMismatch {
            paths: paths.len(),
            packets: packets.len(),
        });
    }
    if let Some(&index) = adversary.compromised.iter().find(|&&i| i >= paths.len()) {
        return Err(SimError::CompromisedOutOfRange {
            index,
            paths: paths.len(),
        });
    }

    let mut captured = Vec::new();
    let mut dispositions = Vec::with_capacity(paths.len());
    let mut in_flight: Vec<Vec<u8>> = Vec::with_capacity(paths.len());
    // (time, path, hop) min-heap; ties resolve by path index.
    let mut queue = BinaryHeap::new();
    for (k, bytes) in packets.iter().enumerate() {
        let mut bytes = bytes.clone();
        let disposition = if adversary.is_compromised(k) {
            captured.push(bytes.clone());
            match adversary.behavior {
                Behavior::Eavesdrop => Disposition::CapturedAndDelivered,
                Behavior::Modify => {
                    let byte = rng.gen_range(MODIFY_FROM.min(bytes.len() - 1)..bytes.len());
                    bytes[byte] ^= 1 << rng.gen_range(0..8);
                    Disposition::CorruptedAndDelivered
                }
                Behavior::Drop => Disposition::Dropped,
            }
        } else {
            Disposition::Delivered
        };
        if disposition != Disposition::Dropped {
            queue.push(Reverse((0u64, k, 0usize)));
        }
        dispositions.push(disposition);
        in_flight.push(bytes);
    }

    let mut received = Vec::new();
    while let Some(Reverse((now, k, hop))) = queue.pop() {
        let nodes = &paths[k].nodes;
        if hop + 1 == nodes.len() {
            received.push(Arrival {
                path: k,
                at_us: now,
                bytes: std::mem::take(&mut in_flight[k]),
            });
            continue;
        }
        let latency = topology.latency(nodes[hop], nodes[hop + 1]).unwrap_or(0.0);
        queue.push(Reverse((now + hop_us(latency, rng), k, hop + 1)));
    }
    Ok(Delivery {
        received,
        captured,
        dispositions,
    })
}
