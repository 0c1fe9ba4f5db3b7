use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use super::{deliver, disjoint_paths, AdversaryModel, Path, SimError, Topology};
use crate::aont::RawMessage;
use crate::packet::{verify, PacketError};
use crate::pipeline::{adversary_reconstruct, receive_with_report, send_prepare, SessionConfig};

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub session: SessionConfig,
    pub message: RawMessage,
    /// Trial i runs on a generator seeded with `seed + i`.
    pub seed: u64,
}

/// One CSV row. Everything here is a function of the seed.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRow {
    pub trial: u64,
    /// The receiver rebuilt the original message.
    pub delivered: bool,
    pub adv_recovered: bool,
    pub macs_rejected: usize,
    /// Receiver's reassembly candidates; 0 when it failed before reassembly.
    pub candidates_tried: u64,
    /// Simulated time at which the last packet reached the receiver.
    pub ms_reconstruct: f64,
    pub adv_candidates_tried: u64,
    /// `gate/Kind` of the receiver's error, if any.
    pub failure: Option<String>,
}

/// Wall-clock time spent in each phase, summed over trials.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PhaseTimes {
    pub send: Duration,
    pub deliver: Duration,
    pub receive: Duration,
    pub attack: Duration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub trials: u64,
    pub receiver_success_rate: f64,
    pub adversary_recovery_rate: f64,
    pub macs_rejected: usize,
    pub mean_candidates_tried: f64,
    pub mean_adversary_candidates: f64,
    pub failures: BTreeMap<String, u64>,
    pub wall: PhaseTimes,
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub paths: Vec<Path>,
    pub rows: Vec<TrialRow>,
    pub summary: Summary,
}

impl ExperimentReport {
    pub fn render(&self, topology: &Topology) -> String {
        let s = &self.summary;
        let trials = s.trials as f64;
        let per_trial_ms = |d: Duration| d.as_secs_f64() * 1000.0 / trials;
        let mut out = String::new();
        for (i, p) in self.paths.iter().enumerate() {
            let _ = writeln!(out, "path {i}: {} ({:.3} ms)", p.describe(topology), p.latency_ms);
        }
        let _ = writeln!(out, "trials:                  {}", s.trials);
        let _ = writeln!(out, "receiver success:        {:.1}%", 100.0 * s.receiver_success_rate);
        let _ = writeln!(
            out,
            "adversary recovery:      {:.1}%",
            100.0 * s.adversary_recovery_rate
        );
        let _ = writeln!(out, "MACs rejected:           {}", s.macs_rejected);
        let _ = writeln!(out, "mean candidates tried:   {:.2}", s.mean_candidates_tried);
        let _ = writeln!(out, "mean adversary attempts: {:.2}", s.mean_adversary_candidates);
        for (failure, count) in &s.failures {
            let _ = writeln!(out, "receiver failure {failure}: {count}");
        }
        let _ = writeln!(
            out,
            "wall ms per trial:       send {:.3}, deliver {:.3}, receive {:.3}, attack {:.3}",
            per_trial_ms(s.wall.send),
            per_trial_ms(s.wall.deliver),
            per_trial_ms(s.wall.receive),
            per_trial_ms(s.wall.attack),
        );
        out
    }
}

pub fn run_experiment(
    topology: &Topology,
    src: &str,
    dst: &str,
    cfg: &ExperimentConfig,
    adversary: &AdversaryModel,
    trials: u64,
) -> Result<ExperimentReport, SimError> {
    if trials == 0 {
        return Err(SimError::Config("at least one trial is required".into()));
    }
    cfg.session.validate()?;
    let paths = disjoint_paths(topology, src, dst, cfg.session.n)?;
    let keys = &cfg.session.keys;
    let attacker_modulus = adversary.knows_p.then_some(keys.modulus);

    let mut rows = Vec::with_capacity(trials as usize);
    let mut wall = PhaseTimes::default();
    for trial in 0..trials {
        let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed.wrapping_add(trial));

        let t0 = Instant::now();
        let sent = send_prepare(&cfg.message, &cfg.session, &mut rng)?;
        let t1 = Instant::now();
        let delivery = deliver(topology, &paths, &sent.packets, adversary, &mut rng)?;
        let t2 = Instant::now();
        let received = delivery.received_bytes();
        let outcome = receive_with_report(&received, keys);
        let macs_rejected = received
            .iter()
            .filter(|b| matches!(verify(b, &keys.k0), Err(PacketError::MacMismatch)))
            .count();
        let t3 = Instant::now();
        let attack = (!delivery.captured.is_empty())
            .then(|| adversary_reconstruct(&delivery.captured, attacker_modulus, adversary.budget));
        let t4 = Instant::now();

        wall.send += t1 - t0;
        wall.deliver += t2 - t1;
        wall.receive += t3 - t2;
        wall.attack += t4 - t3;

        let (delivered, candidates_tried, failure) = match outcome {
            Ok(r) => (r.message == cfg.message, r.candidates_tried, None),
            Err(e) => (false, 0, Some(format!("{}/{}", e.gate(), e.kind()))),
        };
        rows.push(TrialRow {
            trial,
            delivered,
            adv_recovered: attack
                .as_ref()
                .is_some_and(|a| a.recovered.as_ref() == Some(&cfg.message)),
            macs_rejected,
            candidates_tried,
            ms_reconstruct: delivery.last_arrival_us() as f64 / 1000.0,
            adv_candidates_tried: attack.map_or(0, |a| a.candidates_tried),
            failure,
        });
    }

    let n = trials as f64;
    let mut failures = BTreeMap::new();
    for f in rows.iter().filter_map(|r| r.failure.clone()) {
        *failures.entry(f).or_default() += 1;
    }
    let summary = Summary {
        trials,
        receiver_success_rate: rows.iter().filter(|r| r.delivered).count() as f64 / n,
        adversary_recovery_rate: rows.iter().filter(|r| r.adv_recovered).count() as f64 / n,
        macs_rejected: rows.iter().map(|r| r.macs_rejected).sum(),
        mean_candidates_tried: rows.iter().map(|r| r.candidates_tried as f64).sum::<f64>() / n,
        mean_adversary_candidates: rows.iter().map(|r| r.adv_candidates_tried as f64).sum::<f64>() / n,
        failures,
        wall,
    };
    Ok(ExperimentReport { paths, rows, summary })
}

/// Writes `trial,delivered,adv_recovered,macs_rejected,candidates_tried,ms_reconstruct`.
pub fn write_csv<W: io::Write>(rows: &[TrialRow], out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "trial",
        "delivered",
        "adv_recovered",
        "macs_rejected",
        "candidates_tried",
        "ms_reconstruct",
    ])?;
    for r in rows {
        w.write_record([
            r.trial.to_string(),
            (r.delivered as u8).to_string(),
            (r.adv_recovered as u8).to_string(),
            r.macs_rejected.to_string(),
            r.candidates_tried.to_string(),
            format!("{:.3}", r.ms_reconstruct),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::PrimeModulus;
    use crate::packet::{KeyMaterial, MacKey, Mode};
    use crate::simnet::Behavior;

    fn config(n: usize, mode: Mode, seed: u64) -> ExperimentConfig {
        config_with(n, mode, seed, b"multipath experiment payload".to_vec())
    }

    fn config_with(n: usize, mode: Mode, seed: u64, message: Vec<u8>) -> ExperimentConfig {
        let keys = KeyMaterial {
            k0: MacKey::new([0x5a; 20]).unwrap(),
            modulus: PrimeModulus::default(),
            mode,
        };
        ExperimentConfig {
            session: SessionConfig::new(n, keys).unwrap(),
            message: RawMessage::new(message).unwrap(),
            seed,
        }
    }

    #[test]
    fn honest_network_always_delivers() {
        let t = Topology::complete(5, 2.0);
        let r = run_experiment(&t, "n0", "n4", &config(4, Mode::Base, 1), &AdversaryModel::none(), 30).unwrap();
        assert_eq!(r.summary.receiver_success_rate, 1.0);
        assert_eq!(r.summary.adversary_recovery_rate, 0.0);
        assert_eq!(r.summary.macs_rejected, 0);
        assert!(r
            .rows
            .iter()
            .all(|row| row.candidates_tried >= 1 && row.ms_reconstruct >= 4.0));
    }

    #[test]
    fn partial_eavesdropping_learns_nothing() {
        let t = Topology::complete(5, 2.0);
        // Large enough that the withheld fragment is almost surely too long
        // to guess.
        let message: Vec<u8> = (0..2000u32).map(|i| (i * 31 % 251) as u8).collect();
        for mode in [Mode::Base, Mode::Hint] {
            let adv = AdversaryModel::new(Behavior::Eavesdrop, vec![0, 1, 2])
                .with_knows_p(true)
                .with_budget(5_000);
            let r = run_experiment(&t, "n0", "n4", &config_with(4, mode, 2, message.clone()), &adv, 20).unwrap();
            assert_eq!(r.summary.receiver_success_rate, 1.0);
            assert_eq!(r.summary.adversary_recovery_rate, 0.0);
        }
    }

    #[test]
    fn capture_all_with_public_p_recovers() {
        let t = Topology::complete(5, 2.0);
        let adv = AdversaryModel::new(Behavior::Eavesdrop, vec![0, 1, 2, 3]).with_knows_p(true);
        let r = run_experiment(&t, "n0", "n4", &config(4, Mode::Base, 3), &adv, 20).unwrap();
        assert_eq!(r.summary.adversary_recovery_rate, 1.0);
    }

    #[test]
    fn modified_path_is_named_by_mac() {
        let t = Topology::complete(5, 2.0);
        for victim in 0..4 {
            let adv = AdversaryModel::new(Behavior::Modify, vec![victim]);
            let cfg = config(4, Mode::Hint, 4);
            let r = run_experiment(&t, "n0", "n4", &cfg, &adv, 10).unwrap();
            assert_eq!(r.summary.receiver_success_rate, 0.0);
            assert_eq!(r.summary.macs_rejected, 10);
            assert_eq!(r.summary.failures.get("mac/MacMismatch"), Some(&10));

            // The receiver's index points at the arrival carrying the victim path.
            let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
            let sent = send_prepare(&cfg.message, &cfg.session, &mut rng).unwrap();
            let d = deliver(&t, &r.paths, &sent.packets, &adv, &mut rng).unwrap();
            match receive_with_report(&d.received_bytes(), &cfg.session.keys) {
                Err(crate::pipeline::PipelineError::MacMismatch { index, rejected: 1 }) => {
                    assert_eq!(d.received[index].path, victim)
                }
                other => panic!("{other:?}"),
            }
        }
    }

    #[test]
    fn dropped_path_fails_closed() {
        let t = Topology::complete(5, 2.0);
        let adv = AdversaryModel::new(Behavior::Drop, vec![2]);
        let r = run_experiment(&t, "n0", "n4", &config(4, Mode::Base, 5), &adv, 10).unwrap();
        assert_eq!(r.summary.receiver_success_rate, 0.0);
        assert_eq!(r.summary.adversary_recovery_rate, 0.0);
    }

    #[test]
    fn csv_is_reproducible() {
        let t = Topology::complete(6, 1.5);
        let adv = AdversaryModel::new(Behavior::Eavesdrop, vec![1]);
        let csv_of = |seed| {
            let r = run_experiment(&t, "n0", "n5", &config(3, Mode::Hint, seed), &adv, 8).unwrap();
            let mut buf = Vec::new();
            write_csv(&r.rows, &mut buf).unwrap();
            String::from_utf8(buf).unwrap()
        };
        let a = csv_of(9);
        assert_eq!(a, csv_of(9));
        assert_ne!(a, csv_of(10));
        assert!(a.starts_with("trial,delivered,adv_recovered,macs_rejected,candidates_tried,ms_reconstruct\n0,1,0,0,"));
        assert_eq!(a.lines().count(), 9);
    }

    #[test]
    fn too_few_paths_and_zero_trials() {
        let t = Topology::complete(4, 1.0);
        let cfg = config(4, Mode::Base, 0);
        assert!(matches!(
            run_experiment(&t, "n0", "n3", &cfg, &AdversaryModel::none(), 1),
            Err(SimError::NotEnoughPaths {
                requested: 4,
                available: 3
            })
        ));
        assert!(matches!(
            run_experiment(&t, "n0", "n3", &cfg, &AdversaryModel::none(), 0),
            Err(SimError::Config(_))
        ));
    }
}
