//! Minimum set cover instances, an exhaustive oracle and a greedy baseline.

use fixedbitset::FixedBitSet;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest subset count the brute-force oracle accepts.
pub const BRUTE_FORCE_LIMIT: usize = 25;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawInstance")]
pub struct SetCoverInstance {
    universe: usize,
    subsets: Vec<Vec<usize>>,
    budget: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInstance {
    universe: usize,
    subsets: Vec<Vec<usize>>,
    budget: Option<usize>,
}

impl TryFrom<RawInstance> for SetCoverInstance {
    type Error = Error;

    fn try_from(raw: RawInstance) -> Result<Self> {
        let budget = raw.budget.unwrap_or(raw.subsets.len());
        SetCoverInstance::new(raw.universe, raw.subsets, budget)
    }
}

impl SetCoverInstance {
    /// Element ids are 0-based. Subsets are stored sorted and deduplicated;
    /// empty and repeated subsets are allowed.
    pub fn new(universe: usize, subsets: Vec<Vec<usize>>, budget: usize) -> Result<Self> {
        let n = subsets.len();
        if n == 0 {
            return Err(Error::InvalidInstance("no subsets".into()));
        }
        if budget == 0 || budget > n {
            return Err(Error::InvalidInstance(format!("budget {budget} outside [1, {n}]")));
        }
        let mut clean = Vec::with_capacity(n);
        for (i, mut s) in subsets.into_iter().enumerate() {
            if let Some(&e) = s.iter().find(|&&e| e >= universe) {
                return Err(Error::InvalidInstance(format!(
                    "subset {i} has element {e} outside a universe of {universe}"
                )));
            }
            s.sort_unstable();
            s.dedup();
            clean.push(s);
        }
        Ok(SetCoverInstance { universe, subsets: clean, budget })
    }

    pub fn universe(&self) -> usize {
        self.universe
    }

    pub fn subsets(&self) -> &[Vec<usize>] {
        &self.subsets
    }

    /// Number of subsets.
    pub fn n(&self) -> usize {
        self.subsets.len()
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    pub fn contains(&self, subset: usize, element: usize) -> bool {
        self.subsets[subset].binary_search(&element).is_ok()
    }

    /// Same instance with `extra` empty subsets appended.
    pub fn padded(&self, extra: usize) -> SetCoverInstance {
        let mut subsets = self.subsets.clone();
        subsets.extend(std::iter::repeat_with(Vec::new).take(extra));
        SetCoverInstance { subsets, ..self.clone() }
    }

    pub fn with_budget(&self, budget: usize) -> Result<SetCoverInstance> {
        SetCoverInstance::new(self.universe, self.subsets.clone(), budget)
    }

    fn bitset(&self, subset: usize) -> FixedBitSet {
        let mut bits = FixedBitSet::with_capacity(self.universe);
        for &e in &self.subsets[subset] {
            bits.insert(e);
        }
        bits
    }

    fn full(&self) -> FixedBitSet {
        let mut bits = FixedBitSet::with_capacity(self.universe);
        bits.insert_range(..);
        bits
    }
}

/// True iff the selected subsets cover the universe within the budget.
pub fn is_cover(instance: &SetCoverInstance, selection: &[usize]) -> Result<bool> {
    let mut seen = FixedBitSet::with_capacity(instance.n());
    let mut covered = FixedBitSet::with_capacity(instance.universe);
    for &i in selection {
        if i >= instance.n() {
            return Err(Error::InvalidInstance(format!("selection index {i} out of range")));
        }
        if seen.put(i) {
            continue;
        }
        covered.union_with(&instance.bitset(i));
    }
    Ok(seen.count_ones(..) <= instance.budget && covered.is_full())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoverResult {
    Cover(Vec<usize>),
    Infeasible,
}

impl CoverResult {
    pub fn is_cover(&self) -> bool {
        matches!(self, CoverResult::Cover(_))
    }
}

/// Smallest cover of size at most the budget, lexicographically least among
/// those of that size.
pub fn brute_force_min_cover(instance: &SetCoverInstance) -> Result<CoverResult> {
    let n = instance.n();
    if n > BRUTE_FORCE_LIMIT {
        return Err(Error::TooLarge(format!("{n} subsets, oracle limit is {BRUTE_FORCE_LIMIT}")));
    }
    let sets: Vec<FixedBitSet> = (0..n).map(|i| instance.bitset(i)).collect();
    let mut suffix = vec![FixedBitSet::with_capacity(instance.universe); n + 1];
    for i in (0..n).rev() {
        let mut u = suffix[i + 1].clone();
        u.union_with(&sets[i]);
        suffix[i] = u;
    }
    if !suffix[0].is_full() {
        return Ok(CoverResult::Infeasible);
    }
    let full = instance.full();
    let mut chosen = Vec::new();
    for size in 0..=instance.budget {
        let start = FixedBitSet::with_capacity(instance.universe);
        if search(&sets, &suffix, &full, size, 0, &start, &mut chosen) {
            return Ok(CoverResult::Cover(chosen));
        }
    }
    Ok(CoverResult::Infeasible)
}

fn search(
    sets: &[FixedBitSet],
    suffix: &[FixedBitSet],
    full: &FixedBitSet,
    left: usize,
    from: usize,
    covered: &FixedBitSet,
    chosen: &mut Vec<usize>,
) -> bool {
    if left == 0 {
        return covered == full;
    }
    for i in from..=sets.len() - left {
        let mut reach = covered.clone();
        reach.union_with(&suffix[i]);
        if reach != *full {
            return false;
        }
        let mut next = covered.clone();
        next.union_with(&sets[i]);
        chosen.push(i);
        if search(sets, suffix, full, left - 1, i + 1, &next, chosen) {
            return true;
        }
        chosen.pop();
    }
    false
}

/// Repeatedly takes the subset adding the most uncovered elements, lowest
/// index first on ties. May exceed the budget.
pub fn greedy_cover(instance: &SetCoverInstance) -> Result<Vec<usize>> {
    let sets: Vec<FixedBitSet> = (0..instance.n()).map(|i| instance.bitset(i)).collect();
    let mut covered = FixedBitSet::with_capacity(instance.universe);
    let mut chosen = Vec::new();
    while !covered.is_full() {
        let (best, gain) = sets
            .iter()
            .enumerate()
            .map(|(i, s)| (i, s.difference(&covered).count()))
            .fold((0, 0), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
        if gain == 0 {
            return Err(Error::Uncoverable);
        }
        covered.union_with(&sets[best]);
        chosen.push(best);
    }
    chosen.sort_unstable();
    Ok(chosen)
}

/// Random instance with a cover of size `planted` hidden among `n` subsets.
/// Every element lands in exactly one planted subset; the others are random.
pub fn planted_instance<R: Rng>(
    rng: &mut R,
    universe: usize,
    n: usize,
    planted: usize,
    budget: usize,
) -> Result<SetCoverInstance> {
    if planted == 0 || planted > n || planted > budget {
        return Err(Error::BadParams(format!("cannot plant {planted} of {n} subsets with budget {budget}")));
    }
    let mut subsets = vec![Vec::new(); n];
    for e in 0..universe {
        subsets[rng.gen_range(0..planted)].push(e);
    }
    for s in subsets.iter_mut().skip(planted) {
        *s = (0..universe).filter(|_| rng.gen_bool(0.4)).collect();
    }
    subsets.shuffle(rng);
    SetCoverInstance::new(universe, subsets, budget)
}

/// Uniformly random instance; each element joins each subset with the given probability.
pub fn random_instance<R: Rng>(rng: &mut R, universe: usize, n: usize, budget: usize, density: f64) -> Result<SetCoverInstance> {
    let subsets = (0..n)
        .map(|_| (0..universe).filter(|_| rng.gen_bool(density)).collect())
        .collect();
    SetCoverInstance::new(universe, subsets, budget)
}

/// Every instance with `1 ≤ |S| ≤ max_universe`, `1 ≤ n ≤ max_n` and
/// `1 ≤ K ≤ min(max_budget, n)`, taking each multiset of subsets once
/// (subset masks in non-decreasing order).
pub fn enumerate_instances(max_n: usize, max_universe: usize, max_budget: usize) -> Vec<SetCoverInstance> {
    enumerate_instances_where(max_n, max_universe, |n| 1..=max_budget.min(n))
}

/// Like [`enumerate_instances`] with a caller-chosen budget range per `n`.
pub fn enumerate_instances_where<I>(
    max_n: usize,
    max_universe: usize,
    budgets: impl Fn(usize) -> I,
) -> Vec<SetCoverInstance>
where
    I: IntoIterator<Item = usize>,
{
    assert!(max_universe < 16, "mask enumeration is for tiny universes");
    let mut out = Vec::new();
    for universe in 1..=max_universe {
        let masks = 1usize << universe;
        for n in 1..=max_n {
            let budgets: Vec<usize> = budgets(n).into_iter().filter(|&k| k >= 1 && k <= n).collect();
            if budgets.is_empty() {
                continue;
            }
            let mut picks = vec![0usize; n];
            loop {
                let subsets: Vec<Vec<usize>> = picks
                    .iter()
                    .map(|&mask| (0..universe).filter(|e| mask >> e & 1 == 1).collect())
                    .collect();
                for &k in &budgets {
                    out.push(SetCoverInstance::new(universe, subsets.clone(), k).expect("generated instance is valid"));
                }
                // next non-decreasing sequence
                let Some(pos) = (0..n).rev().find(|&i| picks[i] + 1 < masks) else { break };
                let v = picks[pos] + 1;
                picks[pos..].iter_mut().for_each(|p| *p = v);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn abc() -> SetCoverInstance {
        SetCoverInstance::new(3, vec![vec![0, 1], vec![1, 2], vec![2]], 2).unwrap()
    }

    #[test]
    fn cover_examples() {
        let sc = abc();
        assert!(is_cover(&sc, &[0, 1]).unwrap());
        assert!(!is_cover(&sc, &[2]).unwrap());
        let all = sc.with_budget(3).unwrap();
        assert!(is_cover(&all, &[0, 1, 2]).unwrap());
        assert!(!is_cover(&sc, &[0, 1, 2]).unwrap(), "over budget");
        assert!(is_cover(&sc, &[9]).is_err());
    }

    #[test]
    fn oracle_examples() {
        assert_eq!(brute_force_min_cover(&abc()).unwrap(), CoverResult::Cover(vec![0, 1]));
        let empty = SetCoverInstance::new(1, vec![vec![]], 1).unwrap();
        assert_eq!(brute_force_min_cover(&empty).unwrap(), CoverResult::Infeasible);
        let tight = SetCoverInstance::new(2, vec![vec![0]], 1).unwrap();
        assert_eq!(brute_force_min_cover(&tight).unwrap(), CoverResult::Infeasible);
        let big = SetCoverInstance::new(1, vec![vec![0]; 26], 1).unwrap();
        assert!(matches!(brute_force_min_cover(&big), Err(Error::TooLarge(_))));
    }

    #[test]
    fn oracle_prefers_smaller_then_lex_least() {
        let sc = SetCoverInstance::new(3, vec![vec![0], vec![1, 2], vec![0, 1, 2], vec![0, 1, 2]], 3).unwrap();
        assert_eq!(brute_force_min_cover(&sc).unwrap(), CoverResult::Cover(vec![2]));
    }

    #[test]
    fn planted_instances_are_feasible() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let sc = planted_instance(&mut rng, 8, 10, 3, 3).unwrap();
            match brute_force_min_cover(&sc).unwrap() {
                CoverResult::Cover(s) => assert!(s.len() <= 3 && is_cover(&sc, &s).unwrap()),
                CoverResult::Infeasible => panic!("planted cover missed"),
            }
        }
    }

    #[test]
    fn greedy_examples() {
        let one = SetCoverInstance::new(3, vec![vec![0, 1, 2]], 1).unwrap();
        assert_eq!(greedy_cover(&one).unwrap(), vec![0]);
        let ab = SetCoverInstance::new(2, vec![vec![0], vec![1], vec![0, 1]], 3).unwrap();
        assert_eq!(greedy_cover(&ab).unwrap(), vec![2]);
        let missing = SetCoverInstance::new(2, vec![vec![0]], 1).unwrap();
        assert!(matches!(greedy_cover(&missing), Err(Error::Uncoverable)));
    }

    #[test]
    fn greedy_can_overshoot() {
        // The big middle subset lures greedy away from the two halves.
        let sc = SetCoverInstance::new(6, vec![vec![0, 1, 2], vec![3, 4, 5], vec![0, 1, 3, 4]], 2).unwrap();
        let greedy = greedy_cover(&sc).unwrap();
        assert_eq!(greedy.len(), 3);
        assert_eq!(brute_force_min_cover(&sc).unwrap(), CoverResult::Cover(vec![0, 1]));
    }

    #[test]
    fn family_size_and_validity() {
        let family = enumerate_instances(4, 3, 2);
        assert_eq!(family.len(), 1140);
        let unique: std::collections::HashSet<_> = family.iter().collect();
        assert_eq!(unique.len(), family.len());
        assert!(family.iter().all(|sc| sc.budget() <= 2 && sc.n() <= 4 && sc.universe() <= 3));
    }

    #[test]
    fn json_defaults_budget_and_rejects_bad_ids() {
        let sc: SetCoverInstance = serde_json::from_str(r#"{"universe":2,"subsets":[[0],[1,0]]}"#).unwrap();
        assert_eq!(sc.budget(), 2);
        assert_eq!(sc.subsets()[1], vec![0, 1]);
        let text = serde_json::to_string(&sc).unwrap();
        assert_eq!(text, r#"{"universe":2,"subsets":[[0],[0,1]],"budget":2}"#);
        assert_eq!(serde_json::from_str::<SetCoverInstance>(&text).unwrap(), sc);
        assert!(serde_json::from_str::<SetCoverInstance>(r#"{"universe":2,"subsets":[[2]]}"#).is_err());
        assert!(serde_json::from_str::<SetCoverInstance>(r#"{"universe":2,"subsets":[[0]],"budget":2}"#).is_err());
    }

    fn arb_instance() -> impl Strategy<Value = SetCoverInstance> {
        (1usize..6, 1usize..7).prop_flat_map(|(universe, n)| {
            (
                prop::collection::vec(prop::collection::vec(0..universe, 0..=universe), n),
                1..=n,
            )
                .prop_map(move |(subsets, k)| SetCoverInstance::new(universe, subsets, k).unwrap())
        })
    }

    proptest! {
        #[test]
        fn oracle_covers_are_covers(sc in arb_instance()) {
            if let CoverResult::Cover(s) = brute_force_min_cover(&sc).unwrap() {
                prop_assert!(is_cover(&sc, &s).unwrap());
            }
        }

        #[test]
        fn empty_padding_is_neutral(sc in arb_instance(), extra in 0usize..4) {
            prop_assert_eq!(
                brute_force_min_cover(&sc).unwrap().is_cover(),
                brute_force_min_cover(&sc.padded(extra)).unwrap().is_cover()
            );
        }

        #[test]
        fn greedy_output_covers(sc in arb_instance()) {
            if let Ok(sel) = greedy_cover(&sc) {
                let all = sc.with_budget(sc.n()).unwrap();
                prop_assert!(is_cover(&all, &sel).unwrap());
            } else {
                prop_assert!(!is_cover(&sc.with_budget(sc.n()).unwrap(), &(0..sc.n()).collect::<Vec<_>>()).unwrap());
            }
        }
    }
}
