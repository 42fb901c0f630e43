//! Turns a [`JobSpec`] into library objects. Every error names the offending
//! location in the job file.

use std::collections::BTreeMap;

use pdcrys::chart::{Atlas, Chart, FrobLift, LaurentPoly, PolyMat};
use pdcrys::cohom::GluedModule;
use pdcrys::conn::{ConnModule, GammaModule, Lambda};
use pdcrys::fontaine::{self, FilteredConnModule, FontaineModule};
use pdcrys::pdhopf::Idx;
use pdcrys::ring::Ring;

use crate::jobspec::{AtlasSpec, JobSpec, LambdaSpec, LiftSpec, MatTerm, ModuleSpec, Term};

pub fn ring(job: &JobSpec) -> Result<Ring, String> {
    let s = &job.ring;
    Ring::new(s.p, s.n, s.s).map_err(|e| format!("ring: {e}"))
}

pub fn poly(r: Ring, d: usize, terms: &[Term], at: &str) -> Result<LaurentPoly, String> {
    let mut f = LaurentPoly::zero(r, d);
    for (k, (e, c)) in terms.iter().enumerate() {
        if e.len() != d {
            return Err(format!("{at}[{k}]: exponent vector has {} entries, expected {d}", e.len()));
        }
        f.add_term(e.iter().copied().collect(), r.from_int(*c));
    }
    Ok(f)
}

pub fn matrix(r: Ring, d: usize, rows: usize, cols: usize, terms: &[MatTerm], at: &str) -> Result<PolyMat, String> {
    let mut m = PolyMat::zeros(r, d, rows, cols);
    for (k, (e, i, j, c)) in terms.iter().enumerate() {
        if e.len() != d {
            return Err(format!("{at}[{k}]: exponent vector has {} entries, expected {d}", e.len()));
        }
        if *i >= rows || *j >= cols {
            return Err(format!("{at}[{k}]: entry ({i}, {j}) outside a {rows}×{cols} matrix"));
        }
        let mut x = m.get(*i, *j).clone();
        x.add_term(e.iter().copied().collect(), r.from_int(*c));
        m.set(*i, *j, x);
    }
    Ok(m)
}

/// The atlas together with every named lift.
#[derive(Clone, Debug)]
pub struct Built {
    pub atlas: Atlas,
    pub lifts: BTreeMap<String, (usize, FrobLift)>,
}

impl Built {
    pub fn lift(&self, name: &str) -> Result<&(usize, FrobLift), String> {
        self.lifts.get(name).ok_or_else(|| {
            let known: Vec<&str> = self.lifts.keys().map(|s| s.as_str()).collect();
            format!("lift \"{name}\" is not declared (known: {})", known.join(", "))
        })
    }
}

fn bare_atlas(r: Ring, spec: &AtlasSpec, at: &str) -> Result<Atlas, String> {
    let atlas = match spec {
        AtlasSpec::Affine { d, .. } => {
            let c = Chart::affine(r, *d);
            Atlas::single(c.clone(), FrobLift::standard(&c))
        }
        AtlasSpec::Torus { d, .. } => {
            let c = Chart::torus(r, *d);
            Atlas::single(c.clone(), FrobLift::standard(&c))
        }
        AtlasSpec::ProjectiveLine { .. } => Atlas::projective_line(r),
        AtlasSpec::Product { factors, .. } => {
            let mut it = factors.iter().enumerate();
            let (_, first) = it.next().ok_or_else(|| format!("{at}.factors: empty product"))?;
            let mut acc = bare_atlas(r, first, &format!("{at}.factors[0]"))?;
            for (k, f) in it {
                let b = bare_atlas(r, f, &format!("{at}.factors[{k}]"))?;
                acc = Atlas::product(&acc, &b).map_err(|e| format!("{at}.factors[{k}]: {e}"))?;
            }
            acc
        }
        AtlasSpec::Charts { charts, overlaps, .. } => {
            let d = charts.first().map(|c| c.invertible.len()).ok_or_else(|| format!("{at}.charts: no charts"))?;
            let mut atlas = Atlas::empty(r, d);
            for (k, cs) in charts.iter().enumerate() {
                if cs.invertible.len() != d {
                    return Err(format!("{at}.charts[{k}]: {} coordinates, expected {d}", cs.invertible.len()));
                }
                let mut c = Chart::with_invertible(r, cs.invertible.clone());
                if !cs.coordinates.is_empty() {
                    if cs.coordinates.len() != d {
                        return Err(format!("{at}.charts[{k}].coordinates: expected {d} names"));
                    }
                    c.names = cs.coordinates.clone();
                }
                atlas.lifts.push(FrobLift::standard(&c));
                atlas.charts.push(c);
            }
            for (k, o) in overlaps.iter().enumerate() {
                let loc = format!("{at}.overlaps[{k}]");
                if o.from >= charts.len() || o.to >= charts.len() || o.from == o.to {
                    return Err(format!("{loc}: charts ({}, {}) do not name an overlap", o.from, o.to));
                }
                if o.images.len() != d || o.invertible.len() != d {
                    return Err(format!("{loc}: expected {d} images and {d} invertibility flags"));
                }
                let imgs = o
                    .images
                    .iter()
                    .enumerate()
                    .map(|(i, t)| poly(r, d, t, &format!("{loc}.images[{i}]")))
                    .collect::<Result<Vec<_>, _>>()?;
                atlas.transitions.insert((o.from, o.to), imgs);
                atlas.overlap_invertible.insert((o.from, o.to), o.invertible.clone());
            }
            atlas
        }
    };
    Ok(atlas)
}

fn named_lift(r: Ring, atlas: &Atlas, l: &LiftSpec, at: &str) -> Result<FrobLift, String> {
    let ch = atlas
        .charts
        .get(l.chart)
        .ok_or_else(|| format!("{at}.chart: no chart {}", l.chart))?;
    let up = r.at_level(r.n() + 1);
    if l.corrections.len() > ch.d {
        return Err(format!("{at}.corrections: {} entries for {} coordinates", l.corrections.len(), ch.d));
    }
    let a = l
        .corrections
        .iter()
        .enumerate()
        .map(|(i, t)| poly(up, ch.d, t, &format!("{at}.corrections[{i}]")))
        .collect::<Result<Vec<_>, _>>()?;
    FrobLift::from_corrections(ch, &a).map_err(|e| format!("{at}: {e}"))
}

/// Builds the atlas. The first named lift on a chart replaces its standard lift.
pub fn atlas(job: &JobSpec) -> Result<Built, String> {
    let r = ring(job)?;
    let spec = job.atlas.as_ref().ok_or("atlas: missing")?;
    let mut atlas = bare_atlas(r, spec, "atlas")?;
    let mut lifts = BTreeMap::new();
    let mut replaced = vec![false; atlas.len()];
    for (k, l) in spec.lifts().iter().enumerate() {
        let at = format!("atlas.lifts[{k}]");
        let f = named_lift(r, &atlas, l, &at)?;
        if lifts.insert(l.name.clone(), (l.chart, f.clone())).is_some() {
            return Err(format!("{at}.name: \"{}\" is declared twice", l.name));
        }
        if !replaced[l.chart] {
            replaced[l.chart] = true;
            atlas.lifts[l.chart] = f;
        }
    }
    let rep = atlas.validate();
    if !rep.is_valid() {
        return Err(format!("atlas: {}", rep.failures.join("; ")));
    }
    Ok(Built { atlas, lifts })
}

pub fn module_spec(job: &JobSpec) -> Result<&ModuleSpec, String> {
    job.module.as_ref().ok_or_else(|| "module: missing".to_string())
}

pub fn rank(m: &ModuleSpec) -> usize {
    if m.structure_sheaf {
        1
    } else {
        m.rank
    }
}

pub fn lambda(m: &ModuleSpec) -> Lambda {
    match m.lambda {
        LambdaSpec::One => Lambda::One,
        LambdaSpec::P => Lambda::P,
        LambdaSpec::Higgs => Lambda::Higgs,
    }
}

pub fn bound(r: Ring, m: &ModuleSpec) -> u32 {
    m.bound
        .unwrap_or((rank(m) as u32 + 1) * r.n() * r.p() as u32 + 2)
}

fn local_connection(m: &ModuleSpec, j: usize) -> Result<(&[Vec<MatTerm>], String), String> {
    if m.charts.is_empty() {
        Ok((&m.connection, "module.connection".into()))
    } else {
        let l = m
            .charts
            .get(j)
            .ok_or_else(|| format!("module.charts: no entry for chart {j}"))?;
        Ok((&l.connection, format!("module.charts[{j}].connection")))
    }
}

/// The module on chart `j`.
pub fn connection(job: &JobSpec, b: &Built, j: usize) -> Result<ConnModule, String> {
    let r = ring(job)?;
    let m = module_spec(job)?;
    let ch = b
        .atlas
        .charts
        .get(j)
        .ok_or_else(|| format!("chart {j}: the atlas has {} charts", b.atlas.len()))?;
    if m.structure_sheaf {
        return Ok(ConnModule::trivial(ch, 1, Lambda::One));
    }
    if !m.gamma.is_empty() && m.connection.is_empty() && m.charts.is_empty() {
        return Ok(gamma(job, b)?.p_connection(ch));
    }
    let d = ch.d;
    let (terms, at) = local_connection(m, j)?;
    if m.rank == 0 {
        return Err("module.rank: must be positive".into());
    }
    let mats = if terms.is_empty() {
        vec![PolyMat::zeros(r, d, m.rank, m.rank); d]
    } else {
        if terms.len() != d {
            return Err(format!("{at}: {} matrices for {d} coordinates", terms.len()));
        }
        terms
            .iter()
            .enumerate()
            .map(|(i, t)| matrix(r, d, m.rank, m.rank, t, &format!("{at}[{i}]")))
            .collect::<Result<Vec<_>, _>>()?
    };
    ConnModule::new(ch.clone(), lambda(m), mats).map_err(|e| format!("{at}: {e}"))
}

pub fn gamma(job: &JobSpec, b: &Built) -> Result<GammaModule, String> {
    let r = ring(job)?;
    let m = module_spec(job)?;
    if m.gamma.is_empty() {
        return Err("module.gamma: a divided-power action is required".into());
    }
    if m.rank == 0 {
        return Err("module.rank: must be positive".into());
    }
    let d = b.atlas.d;
    let mut psi = BTreeMap::new();
    for (k, g) in m.gamma.iter().enumerate() {
        let at = format!("module.gamma[{k}]");
        if g.index.len() != d {
            return Err(format!("{at}.index: expected {d} entries"));
        }
        let idx: Idx = g.index.iter().copied().collect();
        let mat = matrix(r, d, m.rank, m.rank, &g.matrix, &format!("{at}.matrix"))?;
        if psi.insert(idx, mat).is_some() {
            return Err(format!("{at}.index: repeated"));
        }
    }
    GammaModule::from_table(r, d, m.rank, psi).map_err(|e| format!("module.gamma: {e}"))
}

pub fn weights(m: &ModuleSpec) -> Vec<u32> {
    if m.structure_sheaf {
        vec![0]
    } else if m.weights.is_empty() {
        vec![0; m.rank]
    } else {
        m.weights.clone()
    }
}

pub fn filtered(job: &JobSpec, conn: ConnModule) -> Result<FilteredConnModule, String> {
    let r = ring(job)?;
    let m = module_spec(job)?;
    let d = conn.d();
    if m.filtration.is_empty() {
        let w = weights(m);
        if w.len() != conn.rank {
            return Err(format!("module.weights: {} entries for rank {}", w.len(), conn.rank));
        }
        FilteredConnModule::from_weights(conn, &w).map_err(|e| format!("module.weights: {e}"))
    } else {
        let steps = m
            .filtration
            .iter()
            .enumerate()
            .map(|(i, s)| matrix(r, d, conn.rank, s.cols, &s.basis, &format!("module.filtration[{i}].basis")))
            .collect::<Result<Vec<_>, _>>()?;
        FilteredConnModule::new(conn, steps).map_err(|e| format!("module.filtration: {e}"))
    }
}

fn local_frobenius(m: &ModuleSpec, j: usize) -> Result<(Option<&[MatTerm]>, String), String> {
    if m.charts.is_empty() {
        Ok((m.frobenius.as_deref(), "module.frobenius".into()))
    } else {
        let l = m
            .charts
            .get(j)
            .ok_or_else(|| format!("module.charts: no entry for chart {j}"))?;
        Ok((l.frobenius.as_deref(), format!("module.charts[{j}].frobenius")))
    }
}

/// The Fontaine module on chart `j`, keyed to `lift`. It is not validated.
pub fn fontaine_module(job: &JobSpec, b: &Built, j: usize, lift: &FrobLift) -> Result<FontaineModule, String> {
    let r = ring(job)?;
    let m = module_spec(job)?;
    if m.structure_sheaf {
        return Ok(fontaine::structure_sheaf(lift));
    }
    let conn = connection(job, b, j)?;
    let fm = filtered(job, conn)?;
    let (terms, at) = local_frobenius(m, j)?;
    let terms = terms.ok_or_else(|| format!("{at}: missing"))?;
    let phi_f = matrix(r, b.atlas.d, fm.rank(), fm.rank(), terms, &at)?;
    Ok(FontaineModule {
        filtered: fm,
        lift: lift.clone(),
        phi_f,
        bound: bound(r, m),
    })
}

/// The glued module on the whole atlas.
pub fn glued(job: &JobSpec, b: &Built) -> Result<GluedModule, String> {
    let r = ring(job)?;
    let m = module_spec(job)?;
    let atlas = &b.atlas;
    if m.structure_sheaf {
        return Ok(GluedModule::structure_sheaf(atlas));
    }
    let d = atlas.d;
    let mut transitions = BTreeMap::new();
    for (k, t) in m.transitions.iter().enumerate() {
        let at = format!("module.transitions[{k}]");
        if !atlas.transitions.contains_key(&(t.from, t.to)) {
            return Err(format!("{at}: charts ({}, {}) do not overlap", t.from, t.to));
        }
        transitions.insert((t.from, t.to), matrix(r, d, m.rank, m.rank, &t.matrix, &format!("{at}.matrix"))?);
    }
    for key in atlas.transitions.keys() {
        if !transitions.contains_key(key) {
            return Err(format!("module.transitions: no frame change for overlap {key:?}"));
        }
    }
    let has_frob = if m.charts.is_empty() {
        m.frobenius.is_some()
    } else {
        m.charts.iter().all(|c| c.frobenius.is_some())
    };
    if has_frob {
        let mods = (0..atlas.len())
            .map(|j| fontaine_module(job, b, j, &atlas.lifts[j]))
            .collect::<Result<Vec<_>, _>>()?;
        return GluedModule::from_fontaine(atlas, &mods, transitions).map_err(|e| format!("module: {e}"));
    }
    let conns = (0..atlas.len())
        .map(|j| connection(job, b, j))
        .collect::<Result<Vec<_>, _>>()?;
    if atlas.len() == 1 && transitions.is_empty() {
        let w = weights(m);
        return GluedModule::single_chart(atlas, conns[0].clone(), w).map_err(|e| format!("module: {e}"));
    }
    let g = GluedModule {
        atlas: atlas.clone(),
        rank: m.rank,
        weights: weights(m),
        conns,
        transitions,
        frobenius: None,
        bound: bound(r, m),
    };
    g.validate().map_err(|e| format!("module: {e}"))?;
    Ok(g)
}
