//! Randomised search over a family of IFS specs: random draws mixed with
//! mutations of the best finds so far.
//!
//! Every candidate index draws from its own ChaCha8 stream, so a run is a
//! pure function of `(config, seed)` regardless of thread scheduling.

use std::collections::HashSet;
use std::sync::atomic::{AtomicBool, Ordering};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{analyze, ExampleRecord};
use crate::field::{make_field, FieldJson, FieldSpec};
use crate::ifs::{IfsSpec, MapSpec, SymmetryDescriptor};
use crate::neighbor::Limits;
use crate::rational::{format_rational, int};
use crate::topology::AttractorClass;
use crate::{Error, Rational, Vec2};

/// Name of the generator behind every draw.
pub const RNG_ALGORITHM: &str = "ChaCha8Rng(seed_from_u64(seed), stream = candidate index)";

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Filters {
    pub connected: Option<bool>,
    pub min_types: Option<usize>,
    pub max_types: Option<usize>,
    pub attractor_class: Option<AttractorClass>,
    pub min_fli: Option<usize>,
    pub max_fli: Option<usize>,
}

impl Filters {
    /// Only graph outcomes can satisfy a filter set.
    pub fn accepts(&self, r: &ExampleRecord) -> bool {
        let (Some(types), Some(fli), Some(topo)) = (r.neighbor_count, r.fli, &r.topology) else {
            return false;
        };
        self.connected.is_none_or(|c| c == topo.connected)
            && self.min_types.is_none_or(|n| types >= n)
            && self.max_types.is_none_or(|n| types <= n)
            && self.attractor_class.is_none_or(|c| c == topo.classification)
            && self.min_fli.is_none_or(|n| fli >= n)
            && self.max_fli.is_none_or(|n| fli <= n)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpansionJson {
    #[serde(with = "crate::rational::serde_str")]
    pub b: Rational,
    #[serde(with = "crate::rational::serde_str")]
    pub c: Rational,
}

fn default_word_length() -> u32 {
    1
}
fn default_random_fraction() -> f64 {
    0.5
}
fn default_top_k() -> usize {
    32
}
fn default_generation_size() -> usize {
    64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchConfig {
    pub field: FieldJson,
    pub expansion: ExpansionJson,
    /// Generator symmetries; `−1` is always added.
    #[serde(default)]
    pub generators: Vec<SymmetryDescriptor>,
    pub m_range: (usize, usize),
    pub translation_box: i64,
    #[serde(default = "default_word_length")]
    pub symmetry_word_length: u32,
    #[serde(default)]
    pub caps: Limits,
    pub budget: usize,
    pub seed: u64,
    #[serde(default)]
    pub filters: Filters,
    #[serde(default = "default_random_fraction")]
    pub random_fraction: f64,
    #[serde(default = "default_top_k")]
    pub top_k: usize,
    #[serde(default = "default_generation_size")]
    pub generation_size: usize,
    /// Specs analysed first, before any random draw.
    #[serde(default)]
    pub initial_specs: Vec<IfsSpec>,
}

impl SearchConfig {
    pub fn from_json(text: &str) -> Result<Self, Error> {
        Ok(serde_json::from_str(text)?)
    }

    /// Smallest family containing `spec`: its own symmetries as generators and
    /// a box just large enough for its translations.
    pub fn family_of(spec: &IfsSpec) -> SearchConfig {
        let det = spec.det();
        let max_m = det.floor().to_integer().try_into().unwrap_or(usize::MAX).max(spec.m());
        let reach = spec
            .maps
            .iter()
            .map(|m| m.t.x.abs().max(m.t.y.abs()))
            .max()
            .unwrap_or(0)
            .max(1);
        let mut generators: Vec<SymmetryDescriptor> = Vec::new();
        for m in &spec.maps {
            if !generators.contains(&m.sym) {
                generators.push(m.sym.clone());
            }
        }
        SearchConfig {
            field: spec.field.to_json(),
            expansion: ExpansionJson {
                b: spec.b.clone(),
                c: spec.c.clone(),
            },
            generators,
            m_range: (2, max_m.min(spec.m() + 4)),
            translation_box: reach,
            symmetry_word_length: 1,
            caps: Limits::default(),
            budget: 0,
            seed: 0,
            filters: Filters::default(),
            random_fraction: default_random_fraction(),
            top_k: default_top_k(),
            generation_size: default_generation_size(),
            initial_specs: Vec::new(),
        }
    }
}

/// The concrete sampling space described by a config.
#[derive(Clone, Debug)]
pub struct Family {
    pub field: FieldSpec,
    pub b: Rational,
    pub c: Rational,
    pub symmetries: Vec<SymmetryDescriptor>,
    pub m_min: usize,
    pub m_max: usize,
    pub box_size: i64,
}

impl Family {
    pub fn new(config: &SearchConfig) -> Result<Self, Error> {
        let bad = |s: String| Err(Error::Config(s));
        let field = make_field(config.field.a.clone())?;
        let (b, c) = (config.expansion.b.clone(), config.expansion.c.clone());
        let det = crate::field::combo_det(&field, &b, &c);
        if det <= int(1) {
            return bad(format!("expansion not expanding: det M = {}", format_rational(&det)));
        }
        let (m_min, m_max) = config.m_range;
        if m_min < 2 || m_min > m_max {
            return bad(format!("m_range must satisfy 2 ≤ min ≤ max, got {m_min}..{m_max}"));
        }
        if int(m_max as i64) > det {
            return bad(format!(
                "m_range max {m_max} exceeds det M = {}",
                format_rational(&det)
            ));
        }
        if config.translation_box < 1 {
            return bad("translation_box must be ≥ 1".into());
        }
        if !(0.0..=1.0).contains(&config.random_fraction) {
            return bad("random_fraction must lie in [0, 1]".into());
        }
        if config.top_k == 0 || config.generation_size == 0 {
            return bad("top_k and generation_size must be ≥ 1".into());
        }
        for (i, g) in config.generators.iter().enumerate() {
            if !g.is_rotation(&field) {
                return bad(format!("generator {} is not a symmetry of the lattice form", i + 1));
            }
        }
        let symmetries = symmetry_set(&field, &config.generators, config.symmetry_word_length);
        let family = Family {
            field,
            b,
            c,
            symmetries,
            m_min,
            m_max,
            box_size: config.translation_box,
        };
        if (family.map_count() as u128) < m_max as u128 {
            return Err(Error::FamilyExhausted(format!(
                "only {} distinct maps for m up to {m_max}",
                family.map_count()
            )));
        }
        Ok(family)
    }

    pub fn map_count(&self) -> usize {
        let side = (2 * self.box_size + 1) as usize;
        self.symmetries.len() * side * side
    }

    fn random_map<R: Rng>(&self, rng: &mut R) -> MapSpec {
        let sym = self.symmetries[rng.random_range(0..self.symmetries.len())].clone();
        let l = self.box_size;
        MapSpec::new(sym, rng.random_range(-l..=l), rng.random_range(-l..=l))
    }

    fn in_box(&self, t: &Vec2<i64>) -> bool {
        t.x.abs() <= self.box_size && t.y.abs() <= self.box_size
    }

    pub fn contains(&self, spec: &IfsSpec) -> bool {
        spec.field == self.field
            && spec.b == self.b
            && spec.c == self.c
            && (self.m_min..=self.m_max).contains(&spec.m())
            && spec
                .maps
                .iter()
                .all(|m| self.in_box(&m.t) && self.symmetries.contains(&m.sym))
    }

    fn spec(&self, maps: Vec<MapSpec>) -> IfsSpec {
        IfsSpec::new(self.field.clone(), self.b.clone(), self.c.clone(), maps)
    }

    fn all_maps(&self) -> impl Iterator<Item = MapSpec> + '_ {
        let l = self.box_size;
        self.symmetries.iter().flat_map(move |s| {
            (-l..=l).flat_map(move |x| (-l..=l).map(move |y| MapSpec::new(s.clone(), x, y)))
        })
    }
}

/// `{±w : w a product of at most `len` generators or their inverses}`, in
/// breadth-first order starting from the identity.
pub fn symmetry_set(field: &FieldSpec, generators: &[SymmetryDescriptor], len: u32) -> Vec<SymmetryDescriptor> {
    let mut letters: Vec<SymmetryDescriptor> = Vec::new();
    for g in generators {
        for h in [g.clone(), g.inverse(field)] {
            if !letters.contains(&h) {
                letters.push(h);
            }
        }
    }
    let mut out = vec![SymmetryDescriptor::identity()];
    let mut frontier = out.clone();
    for _ in 0..len {
        let mut next = Vec::new();
        for w in &frontier {
            for l in &letters {
                let p = w.compose(l, field);
                if !out.contains(&p) {
                    out.push(p.clone());
                    next.push(p);
                }
            }
        }
        frontier = next;
    }
    let negated: Vec<_> = out.iter().map(|s| s.negate()).collect();
    for s in negated {
        if !out.contains(&s) {
            out.push(s);
        }
    }
    out
}

/// Uniform `m`, then `m` distinct maps uniform over symmetries × box.
pub fn random_spec<R: Rng>(family: &Family, rng: &mut R) -> Result<IfsSpec, Error> {
    let m = rng.random_range(family.m_min..=family.m_max);
    if family.map_count() < m {
        return Err(Error::FamilyExhausted(format!(
            "{} distinct maps cannot fill m = {m}",
            family.map_count()
        )));
    }
    let mut maps: Vec<MapSpec> = Vec::with_capacity(m);
    let mut tries = 0;
    while maps.len() < m {
        let map = family.random_map(rng);
        if !maps.contains(&map) {
            maps.push(map);
        } else {
            tries += 1;
            if tries > 10_000 {
                return Err(Error::FamilyExhausted("too many duplicate draws".into()));
            }
        }
    }
    let spec = family.spec(maps);
    debug_assert!(spec.validate().is_empty());
    Ok(spec)
}

/// One random edit: replace a symmetry, shift a translation by a unit
/// vector, add a map or remove one. The kind is uniform among kinds that
/// have at least one valid outcome.
pub fn mutate<R: Rng>(spec: &IfsSpec, family: &Family, rng: &mut R) -> Result<IfsSpec, Error> {
    let m = spec.m();
    let distinct = |maps: &[MapSpec]| {
        let set: HashSet<&MapSpec> = maps.iter().collect();
        set.len() == maps.len()
    };
    let mut replace = Vec::new();
    for i in 0..m {
        for s in &family.symmetries {
            if *s != spec.maps[i].sym {
                let mut maps = spec.maps.clone();
                maps[i].sym = s.clone();
                if distinct(&maps) {
                    replace.push(maps);
                }
            }
        }
    }
    let mut shift = Vec::new();
    for i in 0..m {
        for (dx, dy) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
            let t = Vec2 {
                x: spec.maps[i].t.x + dx,
                y: spec.maps[i].t.y + dy,
            };
            if family.in_box(&t) {
                let mut maps = spec.maps.clone();
                maps[i].t = t;
                if distinct(&maps) {
                    shift.push(maps);
                }
            }
        }
    }
    let mut add = Vec::new();
    if m < family.m_max {
        for map in family.all_maps() {
            if !spec.maps.contains(&map) {
                let mut maps = spec.maps.clone();
                maps.push(map);
                add.push(maps);
            }
        }
    }
    let mut remove = Vec::new();
    if m > family.m_min {
        for i in 0..m {
            let mut maps = spec.maps.clone();
            maps.remove(i);
            remove.push(maps);
        }
    }
    let kinds: Vec<Vec<Vec<MapSpec>>> = [replace, shift, add, remove]
        .into_iter()
        .filter(|k| !k.is_empty())
        .collect();
    if kinds.is_empty() {
        return Err(Error::Stuck);
    }
    let kind = &kinds[rng.random_range(0..kinds.len())];
    let maps = kind[rng.random_range(0..kind.len())].clone();
    Ok(family.spec(maps))
}

fn rank_key(r: &ExampleRecord, filters: &Filters) -> (bool, usize, std::cmp::Reverse<usize>, String) {
    (
        !filters.accepts(r),
        r.neighbor_count.unwrap_or(usize::MAX),
        std::cmp::Reverse(r.fli.unwrap_or(0)),
        r.id.clone(),
    )
}

/// Filters satisfied first, then fewer neighbor types, then more
/// first-level intersections, then id.
pub fn rank(records: &mut [ExampleRecord], filters: &Filters) {
    records.sort_by_cached_key(|r| rank_key(r, filters));
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SearchStats {
    pub tried: usize,
    pub found: usize,
    pub distinct: usize,
    pub stuck: usize,
    pub candidates: usize,
    pub pruned: usize,
    pub elapsed_secs: f64,
    pub candidates_per_sec: f64,
    pub prune_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchReport {
    pub rng: String,
    pub config: SearchConfig,
    pub records: Vec<ExampleRecord>,
    pub stats: SearchStats,
    pub cancelled: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Progress {
    pub tried: usize,
    pub found: usize,
}

pub fn run_search(config: &SearchConfig) -> Result<SearchReport, Error> {
    run_search_with(config, &AtomicBool::new(false), |_| {})
}

/// Candidate `i` uses stream `i`; generations are barriers, so parents for
/// generation `n + 1` are fixed before it starts.
pub fn run_search_with<F: FnMut(Progress)>(
    config: &SearchConfig,
    cancel: &AtomicBool,
    mut progress: F,
) -> Result<SearchReport, Error> {
    let family = Family::new(config)?;
    for (i, s) in config.initial_specs.iter().enumerate() {
        crate::ifs::ensure_valid(s).map_err(|e| Error::Config(format!("initial spec {}: {e}", i + 1)))?;
    }
    let start = Instant::now();
    let mut stats = SearchStats::default();
    let mut seen: HashSet<String> = HashSet::new();
    let mut pool: Vec<ExampleRecord> = Vec::new();
    let mut cancelled = false;

    while stats.tried < config.budget {
        if cancel.load(Ordering::Relaxed) {
            cancelled = true;
            break;
        }
        let n = config.generation_size.min(config.budget - stats.tried);
        let base = stats.tried;
        let parents: Vec<IfsSpec> = pool
            .iter()
            .filter(|r| r.outcome.is_graph())
            .take(config.top_k)
            .map(|r| r.spec.clone())
            .collect();
        let results: Vec<Option<Result<ExampleRecord, Error>>> = (base..base + n)
            .into_par_iter()
            .map(|idx| {
                if cancel.load(Ordering::Relaxed) {
                    return None;
                }
                let spec = if let Some(s) = config.initial_specs.get(idx) {
                    Ok(s.clone())
                } else {
                    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
                    rng.set_stream(idx as u64);
                    let explore = parents.is_empty() || rng.random::<f64>() < config.random_fraction;
                    if explore {
                        random_spec(&family, &mut rng)
                    } else {
                        let p = &parents[rng.random_range(0..parents.len())];
                        mutate(p, &family, &mut rng)
                    }
                };
                Some(spec.and_then(|s| analyze(&s, config.caps)))
            })
            .collect();
        if results.iter().any(|r| r.is_none()) {
            cancelled = true;
        }
        for r in results.into_iter().flatten() {
            stats.tried += 1;
            match r {
                Ok(record) => {
                    let (c, p) = record.outcome.counts();
                    stats.candidates += c;
                    stats.pruned += p;
                    if seen.insert(record.id.clone()) {
                        pool.push(record);
                    }
                }
                Err(Error::Stuck) => stats.stuck += 1,
                Err(e) => return Err(e),
            }
        }
        rank(&mut pool, &config.filters);
        stats.found = pool.iter().filter(|r| config.filters.accepts(r)).count();
        progress(Progress {
            tried: stats.tried,
            found: stats.found,
        });
        if cancelled {
            break;
        }
    }

    stats.distinct = pool.len();
    stats.elapsed_secs = start.elapsed().as_secs_f64();
    stats.candidates_per_sec = if stats.elapsed_secs > 0.0 {
        stats.tried as f64 / stats.elapsed_secs
    } else {
        0.0
    };
    let examined = stats.candidates + stats.pruned;
    stats.prune_ratio = if examined > 0 {
        stats.pruned as f64 / examined as f64
    } else {
        0.0
    };
    let records: Vec<ExampleRecord> = pool
        .into_iter()
        .filter(|r| config.filters.accepts(r))
        .collect();
    stats.found = records.len();
    Ok(SearchReport {
        rng: RNG_ALGORITHM.to_string(),
        config: config.clone(),
        records,
        stats,
        cancelled,
    })
}
