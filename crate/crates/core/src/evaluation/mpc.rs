use serde::{Deserialize, Serialize};

use super::pdp::PdpTensor;
use crate::array::ArraySetup;
use crate::units::{db_to_lin, lin_to_db};

/// Detection level `max(noise + margin, peak - dynamic range)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRule {
    pub margin_db: f64,
    pub dynamic_range_db: f64,
}

impl ThresholdRule {
    pub const DETECTION: ThresholdRule = ThresholdRule {
        margin_db: 6.0,
        dynamic_range_db: 30.0,
    };
    pub const DELAY_SPREAD: ThresholdRule = ThresholdRule {
        margin_db: 6.0,
        dynamic_range_db: 25.0,
    };

    pub fn level(&self, noise: f64, peak: f64) -> f64 {
        (noise * db_to_lin(self.margin_db)).max(peak * db_to_lin(-self.dynamic_range_db))
    }
}

impl Default for ThresholdRule {
    fn default() -> Self {
        Self::DETECTION
    }
}

/// Mean power of the highest-delay `fraction` of bins.
pub fn tail_noise(pdp: &[f64], fraction: f64) -> f64 {
    let count = ((pdp.len() as f64 * fraction).ceil() as usize).clamp(1, pdp.len().max(1));
    let tail = &pdp[pdp.len() - count..];
    tail.iter().sum::<f64>() / count as f64
}

/// Tail noise averaged over every pair of a PDP tensor.
pub fn tensor_noise(pdp: &PdpTensor, fraction: f64) -> f64 {
    (0..pdp.pairs()).map(|p| tail_noise(pdp.pair(p), fraction)).sum::<f64>() / pdp.pairs() as f64
}

/// A specular multipath component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mpc {
    pub burst: usize,
    pub tx: usize,
    pub rx: usize,
    pub bin: usize,
    /// Bin-centred delay, seconds.
    pub delay: f64,
    pub dod_az: f64,
    pub doa_az: f64,
    /// Directional power divided by the boresight gain product, dB.
    pub power_db: f64,
    pub doppler_hz: Option<f64>,
    pub track: Option<usize>,
}

impl Mpc {
    pub fn power(&self) -> f64 {
        db_to_lin(self.power_db)
    }
}

const TIE_TOLERANCE: f64 = 1e-9;

/// 3D peak search over `[tx][rx][delay]`.
///
/// A cell is a peak when it beats its whole 3×3×3 neighbourhood (no wrapping)
/// and clears `rule.level(noise, global peak)`. Equal cells resolve toward lower
/// delay, then lower TX index, then lower RX index. Results are ordered by
/// delay, TX, RX.
pub fn peak_search_3d(
    pdp: &PdpTensor,
    noise: f64,
    rule: &ThresholdRule,
    arrays: &ArraySetup,
    bin_width: f64,
    burst: usize,
) -> Vec<Mpc> {
    let peak = pdp.max();
    if peak <= 0.0 {
        return Vec::new();
    }
    let level = rule.level(noise, peak);
    let de_embed = 1.0 / arrays.boresight_product();
    let (nt, nr, nb) = (pdp.n_tx as isize, pdp.n_rx as isize, pdp.bins as isize);
    let mut out = Vec::new();
    for n in 0..nb {
        for t in 0..nt {
            for r in 0..nr {
                let p = pdp.get(t as usize, r as usize, n as usize);
                if p <= level {
                    continue;
                }
                let key = (n, t, r);
                let beaten = (-1..=1).any(|dn| {
                    (-1..=1).any(|dt| {
                        (-1..=1).any(|dr| {
                            let (nn, tt, rr) = (n + dn, t + dt, r + dr);
                            if (dn, dt, dr) == (0, 0, 0)
                                || !(0..nb).contains(&nn)
                                || !(0..nt).contains(&tt)
                                || !(0..nr).contains(&rr)
                            {
                                return false;
                            }
                            let q = pdp.get(tt as usize, rr as usize, nn as usize);
                            let tol = TIE_TOLERANCE * p.max(q);
                            q > p + tol || ((q - p).abs() <= tol && (nn, tt, rr) < key)
                        })
                    })
                });
                if !beaten {
                    out.push(Mpc {
                        burst,
                        tx: t as usize,
                        rx: r as usize,
                        bin: n as usize,
                        delay: n as f64 * bin_width,
                        dod_az: arrays.tx_grid.beam(t as usize).0,
                        doa_az: arrays.rx_grid.beam(r as usize).0,
                        power_db: lin_to_db(p * de_embed),
                        doppler_hz: None,
                        track: None,
                    });
                }
            }
        }
    }
    out
}

/// Removes sidelobe ghosts: an MPC within one delay bin of a stronger one seen
/// on a different beam pair, and no stronger than `sidelobe_db + margin_db`
/// relative to it.
pub fn ghost_filter(mpcs: &[Mpc], sidelobe_db: f64, margin_db: f64) -> Vec<Mpc> {
    mpcs.iter()
        .filter(|m| {
            !mpcs.iter().any(|s| {
                s.power_db > m.power_db
                    && s.bin.abs_diff(m.bin) <= 1
                    && (s.tx != m.tx || s.rx != m.rx)
                    && m.power_db <= s.power_db + sidelobe_db + margin_db
            })
        })
        .cloned()
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackGates {
    pub delay_bins: f64,
    pub angle_deg: f64,
    pub max_miss: usize,
}

impl Default for TrackGates {
    fn default() -> Self {
        Self {
            delay_bins: 2.0,
            angle_deg: 10.0,
            max_miss: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Track {
    pub id: usize,
    pub first_burst: usize,
    pub last_burst: usize,
    pub hits: usize,
    last_bin: usize,
    last_dod: f64,
    last_doa: f64,
    misses: usize,
}

impl Track {
    /// Bursts spanned, first to last detection.
    pub fn len(&self) -> usize {
        self.last_burst - self.first_burst + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Greedy nearest-neighbour tracker, fed one burst at a time.
#[derive(Debug, Clone, Default)]
pub struct Tracker {
    gates: TrackGates,
    tracks: Vec<Track>,
    active: Vec<usize>,
}

impl Tracker {
    pub fn new(gates: TrackGates) -> Self {
        Self {
            gates,
            tracks: Vec::new(),
            active: Vec::new(),
        }
    }

    /// Assigns track ids to the MPCs of the next burst.
    pub fn step(&mut self, burst: usize, mpcs: &mut [Mpc]) {
        let g = self.gates;
        let mut candidates = Vec::new();
        for (ai, &tid) in self.active.iter().enumerate() {
            let t = &self.tracks[tid];
            for (mi, m) in mpcs.iter().enumerate() {
                let dd = t.last_bin.abs_diff(m.bin) as f64;
                let da = (t.last_dod - m.dod_az).abs();
                let db = (t.last_doa - m.doa_az).abs();
                if dd <= g.delay_bins && da <= g.angle_deg && db <= g.angle_deg {
                    let d = (dd / g.delay_bins).powi(2) + (da / g.angle_deg).powi(2) + (db / g.angle_deg).powi(2);
                    candidates.push((d, ai, mi));
                }
            }
        }
        candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let mut track_used = vec![false; self.active.len()];
        let mut mpc_used = vec![false; mpcs.len()];
        for (_, ai, mi) in candidates {
            if track_used[ai] || mpc_used[mi] {
                continue;
            }
            track_used[ai] = true;
            mpc_used[mi] = true;
            let t = &mut self.tracks[self.active[ai]];
            let m = &mut mpcs[mi];
            t.last_burst = burst;
            t.hits += 1;
            t.last_bin = m.bin;
            t.last_dod = m.dod_az;
            t.last_doa = m.doa_az;
            t.misses = 0;
            m.track = Some(t.id);
        }
        let mut still_active = Vec::new();
        for (ai, &tid) in self.active.iter().enumerate() {
            if !track_used[ai] {
                self.tracks[tid].misses += 1;
            }
            if self.tracks[tid].misses <= g.max_miss {
                still_active.push(tid);
            }
        }
        for (mi, m) in mpcs.iter_mut().enumerate() {
            if mpc_used[mi] {
                continue;
            }
            let id = self.tracks.len();
            self.tracks.push(Track {
                id,
                first_burst: burst,
                last_burst: burst,
                hits: 1,
                last_bin: m.bin,
                last_dod: m.dod_az,
                last_doa: m.doa_az,
                misses: 0,
            });
            m.track = Some(id);
            still_active.push(id);
        }
        self.active = still_active;
    }

    pub fn finish(self) -> Vec<Track> {
        self.tracks
    }
}

/// Tracks a whole campaign of per-burst MPC lists in place.
pub fn track_mpcs(bursts: &mut [Vec<Mpc>], gates: TrackGates) -> Vec<Track> {
    let mut tracker = Tracker::new(gates);
    for (b, mpcs) in bursts.iter_mut().enumerate() {
        tracker.step(b, mpcs);
    }
    tracker.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn arrays() -> ArraySetup {
        ArraySetup::default()
    }

    fn tensor_with(cells: &[(usize, usize, usize, f64)]) -> PdpTensor {
        let mut t = PdpTensor::zeros(10, 10, 64);
        for (tx, rx, n, p) in cells {
            t.pair_mut(tx * 10 + rx)[*n] = *p;
        }
        t
    }

    fn mpc(bin: usize, tx: usize, rx: usize, power_db: f64) -> Mpc {
        let a = arrays();
        Mpc {
            burst: 0,
            tx,
            rx,
            bin,
            delay: bin as f64 * 2.5e-9,
            dod_az: a.tx_grid.beam(tx).0,
            doa_az: a.rx_grid.beam(rx).0,
            power_db,
            doppler_hz: None,
            track: None,
        }
    }

    #[test]
    fn single_cell_found() {
        let t = tensor_with(&[(3, 7, 20, 1.0)]);
        let m = peak_search_3d(&t, 0.0, &ThresholdRule::DETECTION, &arrays(), 2.5e-9, 0);
        assert_eq!(m.len(), 1);
        assert_eq!((m[0].tx, m[0].rx, m[0].bin), (3, 7, 20));
        assert_eq!(m[0].dod_az, -15.0);
        assert_eq!(m[0].doa_az, 25.0);
    }

    #[test]
    fn adjacent_equal_bins_merge_to_lower_delay() {
        let t = tensor_with(&[(3, 7, 20, 1.0), (3, 7, 21, 1.0)]);
        let m = peak_search_3d(&t, 0.0, &ThresholdRule::DETECTION, &arrays(), 2.5e-9, 0);
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].bin, 20);
    }

    #[test]
    fn all_noise_gives_nothing() {
        let t = tensor_with(&[]);
        assert!(peak_search_3d(&t, 0.0, &ThresholdRule::DETECTION, &arrays(), 2.5e-9, 0).is_empty());
        let mut flat = PdpTensor::zeros(10, 10, 64);
        flat.power.iter_mut().for_each(|x| *x = 1.0);
        let noise = tensor_noise(&flat, 0.1);
        assert!(peak_search_3d(&flat, noise, &ThresholdRule::DETECTION, &arrays(), 2.5e-9, 0).is_empty());
    }

    #[test]
    fn threshold_rule() {
        let r = ThresholdRule::DETECTION;
        assert!((r.level(1.0, 10.0) - db_to_lin(6.0)).abs() < 1e-12);
        assert!((r.level(1e-6, 1.0) - 1e-3).abs() < 1e-12);
        let t = tensor_with(&[(0, 0, 10, 1.0), (5, 5, 30, 0.5e-3)]);
        let m = peak_search_3d(&t, 0.0, &r, &arrays(), 2.5e-9, 0);
        assert_eq!(m.len(), 1);
    }

    #[test]
    fn ghost_removed_genuine_kept() {
        let truth = mpc(20, 3, 3, -100.0);
        let ghost = mpc(20, 7, 3, -120.0);
        assert_eq!(ghost_filter(&[truth.clone(), ghost], -20.0, 3.0), vec![truth.clone()]);
        let twin = mpc(20, 7, 3, -100.0);
        assert_eq!(ghost_filter(&[truth.clone(), twin.clone()], -20.0, 3.0).len(), 2);
        assert_eq!(ghost_filter(std::slice::from_ref(&truth), -20.0, 3.0), vec![truth.clone()]);
        // same power class but three bins away: not a ghost
        let far = mpc(23, 7, 3, -120.0);
        assert_eq!(ghost_filter(&[truth, far], -20.0, 3.0).len(), 2);
    }

    #[test]
    fn static_paths_make_two_long_tracks() {
        let mut bursts: Vec<Vec<Mpc>> = (0..200).map(|_| vec![mpc(20, 3, 3, -90.0), mpc(40, 8, 1, -99.0)]).collect();
        let tracks = track_mpcs(&mut bursts, TrackGates::default());
        assert_eq!(tracks.len(), 2);
        assert!(tracks.iter().all(|t| t.len() == 200 && t.hits == 200));
    }

    #[test]
    fn short_gap_keeps_track() {
        let mut bursts: Vec<Vec<Mpc>> = (0..10)
            .map(|b| if b == 4 { vec![] } else { vec![mpc(20, 3, 3, -90.0)] })
            .collect();
        let tracks = track_mpcs(&mut bursts, TrackGates::default());
        assert_eq!(tracks.len(), 1);
        assert_eq!(tracks[0].len(), 10);
        assert_eq!(tracks[0].hits, 9);
        // a gap longer than the miss budget splits it
        let mut bursts: Vec<Vec<Mpc>> = (0..10)
            .map(|b| if (3..6).contains(&b) { vec![] } else { vec![mpc(20, 3, 3, -90.0)] })
            .collect();
        assert_eq!(track_mpcs(&mut bursts, TrackGates::default()).len(), 2);
    }

    #[test]
    fn approaching_scatterer_single_track() {
        let mut bursts: Vec<Vec<Mpc>> = (0..30).map(|b| vec![mpc(60 - b, 5, 5, -95.0), mpc(10, 4, 4, -80.0)]).collect();
        let tracks = track_mpcs(&mut bursts, TrackGates::default());
        assert_eq!(tracks.len(), 2);
        let id = bursts[0][0].track.unwrap();
        let delays: Vec<usize> = bursts.iter().flatten().filter(|m| m.track == Some(id)).map(|m| m.bin).collect();
        assert_eq!(delays.len(), 30);
        assert!(delays.windows(2).all(|w| w[1] < w[0]));
    }
}
