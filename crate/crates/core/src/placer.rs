//! Sequence-pair placement with simulated annealing on pin HPWL.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::{ComponentTile, Point, Rect};

/// Two permutations of block indices. `a` precedes `b` in both: `a` is left
/// of `b`. `a` precedes `b` in `pos` only: `a` is above `b`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SequencePair {
    pub pos: Vec<usize>,
    pub neg: Vec<usize>,
}

impl SequencePair {
    pub fn identity(n: usize) -> Self {
        Self {
            pos: (0..n).collect(),
            neg: (0..n).collect(),
        }
    }

    pub fn random(n: usize, rng: &mut impl Rng) -> Self {
        let mut sp = Self::identity(n);
        sp.pos.shuffle(rng);
        sp.neg.shuffle(rng);
        sp
    }

    pub fn is_valid(&self) -> bool {
        let perm = |v: &[usize]| {
            let mut s = v.to_vec();
            s.sort_unstable();
            s.iter().enumerate().all(|(i, &x)| i == x)
        };
        self.pos.len() == self.neg.len() && perm(&self.pos) && perm(&self.neg)
    }

    fn ranks(v: &[usize]) -> Vec<usize> {
        let mut r = vec![0; v.len()];
        for (i, &b) in v.iter().enumerate() {
            r[b] = i;
        }
        r
    }
}

/// Lower-left corners of blocks of the given sizes under longest-path packing.
pub fn pack(sp: &SequencePair, sizes: &[(i64, i64)]) -> Vec<Point> {
    let n = sizes.len();
    let rp = SequencePair::ranks(&sp.pos);
    let mut x = vec![0i64; n];
    let mut y = vec![0i64; n];
    // Γ− order is a topological order for both constraint graphs.
    for (k, &b) in sp.neg.iter().enumerate() {
        for &a in &sp.neg[..k] {
            if rp[a] < rp[b] {
                x[b] = x[b].max(x[a] + sizes[a].0);
            } else {
                y[b] = y[b].max(y[a] + sizes[a].1);
            }
        }
    }
    x.into_iter().zip(y).map(|(x, y)| Point::new(x, y)).collect()
}

/// Sum over nets of the pin bounding-box half perimeter, in nm.
///
/// A net is a list of `(tile index, terminal index)` pairs.
pub fn hpwl(tiles: &[ComponentTile], nets: &[Vec<(usize, usize)>]) -> i64 {
    nets.iter()
        .map(|net| {
            let mut pts = net.iter().filter_map(|&(t, term)| tiles[t].pin(term));
            let Some(first) = pts.next() else { return 0 };
            let (mut lo, mut hi) = (first, first);
            for p in pts {
                lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
                hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
            }
            (hi.x - lo.x) + (hi.y - lo.y)
        })
        .sum()
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct AnnealSchedule {
    /// Starting temperature; `None` derives it from random sequence pairs.
    pub t0: Option<f64>,
    pub cooling: f64,
    pub moves_per_temperature: usize,
    /// Stop once the temperature falls below `t0 * stop_ratio`.
    pub stop_ratio: f64,
    pub seed: u64,
}

impl Default for AnnealSchedule {
    fn default() -> Self {
        Self {
            t0: None,
            cooling: 0.95,
            moves_per_temperature: 100,
            stop_ratio: 1e-4,
            seed: 0,
        }
    }
}

impl AnnealSchedule {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.cooling > 0.0 && self.cooling < 1.0) {
            return Err("cooling factor must lie in (0, 1)".into());
        }
        if !(self.stop_ratio > 0.0 && self.stop_ratio < 1.0) {
            return Err("stop ratio must lie in (0, 1)".into());
        }
        if self.moves_per_temperature == 0 {
            return Err("moves per temperature must be positive".into());
        }
        Ok(())
    }
}

/// Tiles are packed as blocks padded by `margin` per side and rounded up to
/// whole `pitch` multiples; `origin` is the lower-left of the packing.
#[derive(Debug, Clone)]
pub struct Packer<'a> {
    pub tiles: &'a [ComponentTile],
    pub margin: i64,
    pub pitch: i64,
    pub origin: Point,
    sizes: Vec<(i64, i64)>,
}

fn round_up(v: i64, step: i64) -> i64 {
    (v + step - 1).div_euclid(step) * step
}

impl<'a> Packer<'a> {
    pub fn new(tiles: &'a [ComponentTile], margin: i64, pitch: i64, origin: Point) -> Self {
        let sizes = tiles
            .iter()
            .map(|t| {
                (
                    round_up(t.rect.width() + 2 * margin, pitch),
                    round_up(t.rect.height() + 2 * margin, pitch),
                )
            })
            .collect();
        Self {
            tiles,
            margin,
            pitch,
            origin,
            sizes,
        }
    }

    pub fn block_sizes(&self) -> &[(i64, i64)] {
        &self.sizes
    }

    pub fn realize(&self, sp: &SequencePair) -> Vec<ComponentTile> {
        pack(sp, &self.sizes)
            .into_iter()
            .zip(self.tiles)
            .map(|(p, t)| {
                t.moved_to(Point::new(
                    self.origin.x + p.x + self.margin,
                    self.origin.y + p.y + self.margin,
                ))
            })
            .collect()
    }

    /// Bounding box of the padded blocks.
    pub fn extent(&self, sp: &SequencePair) -> Rect {
        let pts = pack(sp, &self.sizes);
        let w = pts.iter().zip(&self.sizes).map(|(p, s)| p.x + s.0).max().unwrap_or(0);
        let h = pts.iter().zip(&self.sizes).map(|(p, s)| p.y + s.1).max().unwrap_or(0);
        Rect::from_size(self.origin, w, h)
    }
}

#[derive(Debug, Clone)]
pub struct AnnealResult {
    pub sp: SequencePair,
    pub tiles: Vec<ComponentTile>,
    pub cost: i64,
    /// Best cost after each temperature step.
    pub best_trace: Vec<i64>,
}

fn population_stdev(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt()
}

/// Anneals over sequence pairs and returns the best placement seen.
pub fn anneal(packer: &Packer<'_>, nets: &[Vec<(usize, usize)>], schedule: &AnnealSchedule) -> AnnealResult {
    let n = packer.tiles.len();
    let cost = |sp: &SequencePair| hpwl(&packer.realize(sp), nets);
    let mut rng = ChaCha8Rng::seed_from_u64(schedule.seed);
    let mut cur = SequencePair::identity(n);
    let mut cur_cost = cost(&cur);
    let mut best = cur.clone();
    let mut best_cost = cur_cost;
    let mut best_trace = Vec::new();

    if n >= 2 {
        let t0 = schedule.t0.unwrap_or_else(|| {
            let samples: Vec<f64> = (0..50)
                .map(|_| cost(&SequencePair::random(n, &mut rng)) as f64)
                .collect();
            10.0 * population_stdev(&samples)
        });
        let stop = t0 * schedule.stop_ratio;
        let mut t = t0;
        while t > stop && t > 0.0 {
            for _ in 0..schedule.moves_per_temperature {
                let i = rng.gen_range(0..n);
                let mut j = rng.gen_range(0..n - 1);
                if j >= i {
                    j += 1;
                }
                let mut next = cur.clone();
                match rng.gen_range(0..3) {
                    0 => next.pos.swap(i, j),
                    1 => next.neg.swap(i, j),
                    _ => {
                        let (a, b) = (next.pos[i], next.pos[j]);
                        next.pos.swap(i, j);
                        let ia = next.neg.iter().position(|&v| v == a).unwrap();
                        let ib = next.neg.iter().position(|&v| v == b).unwrap();
                        next.neg.swap(ia, ib);
                    }
                }
                let next_cost = cost(&next);
                let delta = (next_cost - cur_cost) as f64;
                if delta <= 0.0 || rng.gen::<f64>() < (-delta / t).exp() {
                    cur = next;
                    cur_cost = next_cost;
                    if cur_cost < best_cost {
                        best = cur.clone();
                        best_cost = cur_cost;
                    }
                }
            }
            best_trace.push(best_cost);
            t *= schedule.cooling;
        }
    }

    AnnealResult {
        tiles: packer.realize(&best),
        sp: best,
        cost: best_cost,
        best_trace,
    }
}

/// Every sequence pair over `n` blocks; `(n!)²` entries.
pub fn all_sequence_pairs(n: usize) -> Vec<SequencePair> {
    fn perms(n: usize) -> Vec<Vec<usize>> {
        if n == 0 {
            return vec![Vec::new()];
        }
        let mut out = Vec::new();
        for p in perms(n - 1) {
            for i in 0..=p.len() {
                let mut q = p.clone();
                q.insert(i, n - 1);
                out.push(q);
            }
        }
        out
    }
    let ps = perms(n);
    let mut out = Vec::with_capacity(ps.len() * ps.len());
    for a in &ps {
        for b in &ps {
            out.push(SequencePair {
                pos: a.clone(),
                neg: b.clone(),
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_tiles, Pin};
    use crate::netlist::parse_netlist;
    use crate::tech::TechnologyCard;
    use proptest::prelude::*;

    fn sp(pos: &[usize], neg: &[usize]) -> SequencePair {
        SequencePair {
            pos: pos.to_vec(),
            neg: neg.to_vec(),
        }
    }

    #[test]
    fn two_block_relations() {
        let sizes = [(10, 20), (30, 40)];
        let p = pack(&sp(&[0, 1], &[0, 1]), &sizes);
        assert_eq!(p, vec![Point::new(0, 0), Point::new(10, 0)]);
        // a before b in Γ+, after in Γ−: a above b.
        let p = pack(&sp(&[0, 1], &[1, 0]), &sizes);
        assert_eq!(p, vec![Point::new(0, 40), Point::new(0, 0)]);
        assert_eq!(pack(&sp(&[0], &[0]), &[(5, 5)]), vec![Point::new(0, 0)]);
    }

    #[test]
    fn hpwl_formula() {
        let tile = |x: i64, y: i64| ComponentTile {
            name: "t".into(),
            kind: crate::netlist::DeviceKind::Resistor,
            rect: Rect::new(x, y, x + 10, y + 10),
            pins: vec![Pin {
                terminal: 0,
                at: Point::new(x, y),
            }],
            fingers: Default::default(),
        };
        let tiles = vec![tile(0, 0), tile(2000, 3000)];
        assert_eq!(hpwl(&tiles, &[vec![(0, 0), (1, 0)]]), 5000);
        assert_eq!(hpwl(&tiles, &[vec![(0, 0)]]), 0);
        let moved: Vec<_> = tiles.iter().map(|t| t.translate(700, -300)).collect();
        assert_eq!(hpwl(&moved, &[vec![(0, 0), (1, 0)]]), 5000);
    }

    fn resistor_chain(n: usize) -> (Vec<ComponentTile>, Vec<Vec<(usize, usize)>>) {
        let text: String = (0..n)
            .map(|i| format!("R{i} n{i} n{} 1k W=1u L={}u\n", i + 1, 1 + i))
            .collect();
        let c = parse_netlist(&text).unwrap();
        let tiles = build_tiles(&c, &TechnologyCard::default());
        let mut nets: Vec<Vec<(usize, usize)>> = (0..n.saturating_sub(1))
            .map(|i| vec![(i, 1), (i + 1, 0)])
            .collect();
        nets.push((0..n).map(|i| (i, 0)).collect());
        (tiles, nets)
    }

    #[test]
    fn single_tile_is_identity() {
        let (tiles, nets) = resistor_chain(1);
        let packer = Packer::new(&tiles, 200, 100, Point::new(0, 0));
        let r = anneal(&packer, &nets, &AnnealSchedule::default());
        assert_eq!(r.sp, SequencePair::identity(1));
        assert_eq!(r.tiles[0].rect.ll, Point::new(200, 200));
    }

    #[test]
    fn anneal_improves_and_best_is_monotone() {
        let (tiles, nets) = resistor_chain(4);
        let packer = Packer::new(&tiles, 200, 100, Point::new(0, 0));
        let initial = hpwl(&packer.realize(&SequencePair::identity(4)), &nets);
        let r = anneal(&packer, &nets, &AnnealSchedule::default());
        assert!(r.cost <= initial);
        assert!(r.best_trace.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(hpwl(&r.tiles, &nets), r.cost);
    }

    #[test]
    fn three_tiles_reach_exhaustive_optimum() {
        let (tiles, nets) = resistor_chain(3);
        let packer = Packer::new(&tiles, 200, 100, Point::new(0, 0));
        let all = all_sequence_pairs(3);
        assert_eq!(all.len(), 36);
        let best = all.iter().map(|s| hpwl(&packer.realize(s), &nets)).min().unwrap();
        let r = anneal(&packer, &nets, &AnnealSchedule { seed: 3, ..Default::default() });
        assert_eq!(r.cost, best);
    }

    proptest! {
        #[test]
        fn packing_never_overlaps(
            sizes in proptest::collection::vec((1i64..50, 1i64..50), 1..7),
            seed in any::<u64>(),
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = SequencePair::random(sizes.len(), &mut rng);
            prop_assert!(s.is_valid());
            let p = pack(&s, &sizes);
            let rects: Vec<Rect> = p.iter().zip(&sizes).map(|(p, s)| Rect::from_size(*p, s.0, s.1)).collect();
            for i in 0..rects.len() {
                prop_assert!(rects[i].ll.x >= 0 && rects[i].ll.y >= 0);
                for j in i + 1..rects.len() {
                    prop_assert!(!rects[i].overlaps(&rects[j]));
                }
            }
        }
    }
}
