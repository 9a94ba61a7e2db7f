use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Circuit, ConcreteNetlist, MatchingPairs, NetlistError};

/// Finger counts explored by default.
pub const DEFAULT_FINGER_SET: [u32; 8] = [2, 4, 6, 8, 10, 12, 14, 16];

/// Default cap on the number of concrete netlists per template.
pub const DEFAULT_MAX_NETLISTS: usize = 256;

/// Device name to finger count, for every MOS device of a template.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FingerAssignment(pub BTreeMap<String, u32>);

impl FingerAssignment {
    pub fn get(&self, device: &str) -> Option<u32> {
        self.0.get(device).copied()
    }

    /// Checks coverage, parity, minimum per-finger width and matching.
    pub fn validate(
        &self,
        t: &Circuit,
        pairs: &MatchingPairs,
        min_gate_width_nm: i64,
    ) -> Result<(), NetlistError> {
        for name in self.0.keys() {
            if !t.device(name).is_some_and(|d| d.kind.is_mos()) {
                return Err(NetlistError::ExtraFingers(name.clone()));
            }
        }
        for d in t.mos_devices() {
            let nf = self
                .get(&d.name)
                .ok_or_else(|| NetlistError::MissingFingers(d.name.clone()))?;
            if nf < 2 || nf % 2 != 0 {
                return Err(NetlistError::InvalidFingers {
                    device: d.name.clone(),
                    nf,
                    reason: "finger count must be even and at least 2",
                });
            }
            if !width_allows(d.w_nm(), nf, min_gate_width_nm) {
                return Err(NetlistError::InvalidFingers {
                    device: d.name.clone(),
                    nf,
                    reason: "per-finger width below minimum gate width",
                });
            }
        }
        for (a, b) in &pairs.pairs {
            if self.get(a) != self.get(b) {
                return Err(NetlistError::MatchingViolated(a.clone(), b.clone()));
            }
        }
        Ok(())
    }
}

fn width_allows(w_nm: i64, nf: u32, min_gate_width_nm: i64) -> bool {
    w_nm >= i64::from(nf) * min_gate_width_nm
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Enumerates valid finger assignments in lexicographic order of the
/// per-device finger tuple (devices sorted by name), truncated to `max`.
pub fn enumerate_finger_permutations(
    t: &Circuit,
    pairs: &MatchingPairs,
    allowed: &[u32],
    min_gate_width_nm: i64,
    max: usize,
) -> Result<Vec<FingerAssignment>, NetlistError> {
    pairs.validate(t)?;
    let mut names: Vec<&str> = t.mos_devices().map(|d| d.name.as_str()).collect();
    names.sort_unstable();
    let index_of = |n: &str| names.iter().position(|m| *m == n);

    let mut parent: Vec<usize> = (0..names.len()).collect();
    for (a, b) in &pairs.pairs {
        let (ia, ib) = (index_of(a).unwrap(), index_of(b).unwrap());
        let (ra, rb) = (find(&mut parent, ia), find(&mut parent, ib));
        // Keep the smaller index as root so groups are led by their first name.
        parent[ra.max(rb)] = ra.min(rb);
    }
    let mut values = allowed.to_vec();
    values.sort_unstable();
    values.dedup();

    // Group leaders in name order, each with its admissible finger counts.
    let mut groups: Vec<(usize, Vec<u32>)> = Vec::new();
    for i in 0..names.len() {
        let root = find(&mut parent, i);
        if root == i {
            groups.push((i, values.clone()));
        }
    }
    for i in 0..names.len() {
        let root = find(&mut parent, i);
        let w = t.device(names[i]).unwrap().w_nm();
        let g = groups.iter_mut().find(|(r, _)| *r == root).unwrap();
        g.1.retain(|&nf| nf >= 2 && nf % 2 == 0 && width_allows(w, nf, min_gate_width_nm));
    }
    if groups.iter().any(|(_, v)| v.is_empty()) {
        return Err(NetlistError::OverConstrained);
    }

    let roots: Vec<usize> = (0..names.len()).map(|i| find(&mut parent, i)).collect();
    let mut odometer = vec![0usize; groups.len()];
    let mut out = Vec::new();
    'outer: while out.len() < max {
        let mut map = BTreeMap::new();
        for (i, name) in names.iter().enumerate() {
            let g = groups.iter().position(|(r, _)| *r == roots[i]).unwrap();
            map.insert((*name).to_string(), groups[g].1[odometer[g]]);
        }
        out.push(FingerAssignment(map));
        for g in (0..groups.len()).rev() {
            odometer[g] += 1;
            if odometer[g] < groups[g].1.len() {
                continue 'outer;
            }
            odometer[g] = 0;
        }
        break;
    }
    Ok(out)
}

/// Annotates a template with finger counts.
pub fn apply_fingers(
    t: &Circuit,
    a: &FingerAssignment,
    index: usize,
) -> Result<ConcreteNetlist, NetlistError> {
    for name in a.0.keys() {
        if !t.device(name).is_some_and(|d| d.kind.is_mos()) {
            return Err(NetlistError::ExtraFingers(name.clone()));
        }
    }
    let mut circuit = t.clone();
    for d in circuit.devices.iter_mut().filter(|d| d.kind.is_mos()) {
        d.nf = Some(
            a.get(&d.name)
                .ok_or_else(|| NetlistError::MissingFingers(d.name.clone()))?,
        );
    }
    Ok(ConcreteNetlist {
        index,
        assignment: a.clone(),
        circuit,
    })
}
