use std::collections::BTreeMap;
use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::netlist::{
    apply_values, enumerate_parameters, partition, DesignParameter, EntryKind, Netlist, Owner, ParamValues, Partition,
    Scale,
};
use crate::poi::{poi_from_s, Poi, PoiVector, NEG_INF_DB_SENTINEL};
use crate::twoport::{mna_two_port, Complex, Frequency, ReferenceImpedance, SMatrix, Subcircuit, SwitchState};

use super::{
    Condition, Dataset, DatasetError, DatasetHeader, DatasetKind, Encoding, ResidualParam, Row, SSource, SamplerConfig,
    Strategy, TargetSpec, TopologyInfo, SCHEMA,
};

/// Attempts per row before generation gives up (10× the row budget).
const ATTEMPTS_PER_ROW: usize = 10;
const PASSIVE_DRAWS: usize = 10_000;

/// One distinct E-network topology of a family, with the parameters of its
/// first occurrence.
#[derive(Debug, Clone, PartialEq)]
pub struct SubNetwork {
    pub key: String,
    /// `netlist:label` of the occurrence the subcircuit was taken from.
    pub source: String,
    pub subcircuit: Subcircuit,
    pub params: Vec<DesignParameter>,
}

/// Independent stream per (row, attempt): rows can be generated in any
/// order, in parallel, with identical results.
fn row_rng(seed: u64, row: usize, attempt: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((row as u64) << 8) | attempt as u64);
    rng
}

fn sample_value(p: &DesignParameter, strategy: Strategy, rng: &mut impl Rng) -> f64 {
    let u: f64 = rng.gen();
    let scale = match strategy {
        Strategy::Declared => p.scale,
        Strategy::Uniform => Scale::Linear,
        Strategy::LogUniform => Scale::Log,
    };
    DesignParameter { scale, ..p.clone() }.decode(u)
}

fn generate_rows<F>(count: usize, seed: u64, make: F) -> Result<Vec<Row>, DatasetError>
where
    F: Fn(&mut ChaCha8Rng) -> Result<Row, String> + Sync,
{
    (0..count)
        .into_par_iter()
        .map(|i| {
            let mut reason = String::new();
            for attempt in 0..ATTEMPTS_PER_ROW {
                match make(&mut row_rng(seed, i, attempt)) {
                    Ok(row) => return Ok(row),
                    Err(e) => {
                        log::warn!("row {i}: sample rejected ({e}); resampling");
                        reason = e;
                    }
                }
            }
            Err(DatasetError::SampleBudget { row: i, attempts: ATTEMPTS_PER_ROW, reason })
        })
        .collect()
}

/// Oracle S-parameters of an E-network instance.
pub fn gen_sub_dataset(
    net: &SubNetwork,
    cfg: &SamplerConfig,
    f: Frequency,
    z0: ReferenceImpedance,
    encoding: Encoding,
) -> Result<Dataset, DatasetError> {
    if cfg.count == 0 {
        return Err(DatasetError::EmptyCount);
    }
    let count = if net.params.is_empty() {
        log::warn!("{}: no sizable parameters, emitting a single row", net.key);
        1
    } else {
        cfg.count
    };
    let rows = generate_rows(count, cfg.seed, |rng| {
        let x: Vec<f64> = net.params.iter().map(|p| sample_value(p, cfg.strategy, rng)).collect();
        let values: ParamValues = net.params.iter().map(|p| p.name.clone()).zip(x.iter().copied()).collect();
        let s = mna_two_port(&apply_values(&net.subcircuit, &values), f, z0).map_err(|e| e.to_string())?;
        Ok(Row { topology: 0, features: x, targets: encoding.encode(&s), params: Vec::new() })
    })?;
    let header = DatasetHeader {
        schema: SCHEMA.into(),
        kind: DatasetKind::Sub,
        frequency_hz: f.hz(),
        z0: z0.ohms(),
        seed: cfg.seed,
        source: SSource::FromTopologies,
        encoding,
        topologies: vec![TopologyInfo {
            name: net.source.clone(),
            key: net.key.clone(),
            enetwork_labels: Vec::new(),
            enetwork_keys: Vec::new(),
            params: net.params.clone(),
        }],
        n_enetworks: 0,
        residual: Vec::new(),
        feature_names: net.params.iter().map(|p| p.name.clone()).collect(),
        feature_scales: net.params.iter().map(|p| p.scale).collect(),
        target_names: encoding.names(""),
        conditions: Vec::new(),
    };
    Ok(Dataset { header, rows })
}

/// Distinct E-network topologies across a family, in order of first
/// appearance.
pub fn sub_networks(family: &[Netlist]) -> Result<Vec<SubNetwork>, DatasetError> {
    let mut out: Vec<SubNetwork> = Vec::new();
    for n in family {
        let part = partition(n)?;
        let params = enumerate_parameters(n)?;
        for e in &part.enetworks {
            let own: Vec<DesignParameter> =
                params.iter().filter(|p| p.owner == Owner::ENetwork(e.label.clone())).cloned().collect();
            match out.iter().find(|s| s.key == e.topology_key) {
                Some(s) if s.params.len() != own.len() => {
                    return Err(DatasetError::InconsistentFamily(format!(
                        "E-network `{}` in {} has {} parameters, {} has {}",
                        e.label,
                        n.name,
                        own.len(),
                        s.source,
                        s.params.len()
                    )))
                }
                Some(_) => {}
                None => out.push(SubNetwork {
                    key: e.topology_key.clone(),
                    source: format!("{}:{}", n.name, e.label),
                    subcircuit: e.subcircuit.clone(),
                    params: own,
                }),
            }
        }
    }
    Ok(out)
}

/// Value of one target figure as stored in datasets: −∞ dB becomes the file
/// sentinel; undefined figures are rejected.
pub fn target_value(p: &PoiVector, which: Poi) -> Result<f64, String> {
    match p.get(which) {
        Some(v) if v == f64::NEG_INFINITY => Ok(NEG_INF_DB_SENTINEL),
        Some(v) if v.is_finite() => Ok(v),
        _ => Err(format!("{which} undefined")),
    }
}

/// Whole-circuit figures with every E-network replaced by an S block, the
/// residual parameters set from `x_r` and the switches of `condition`
/// forced.
#[allow(clippy::too_many_arguments)]
pub fn block_poi(
    n: &Netlist,
    part: &Partition,
    residual: &[ResidualParam],
    blocks: &[SMatrix],
    x_r: &[f64],
    condition: &Condition,
    f: Frequency,
    z0: ReferenceImpedance,
) -> Result<PoiVector, String> {
    let mut values = ParamValues::new();
    let mut switches: BTreeMap<String, SwitchState> = condition.clone();
    for (r, &x) in residual.iter().zip(x_r) {
        match r {
            ResidualParam::Value(p) => {
                values.insert(p.name.clone(), x);
            }
            ResidualParam::Switch { name } => {
                switches.insert(name.clone(), SwitchState::from_bit(x >= 0.5));
            }
        }
    }
    let c = part.block_circuit(n, blocks, z0.ohms(), &values, &switches).map_err(|e| e.to_string())?;
    mna_two_port(&c, f, z0).map(|s| poi_from_s(&s)).map_err(|e| e.to_string())
}

/// Random reciprocal matrix with entries uniform in the unit disk,
/// rejection-sampled until its spectral norm is at most 1.
pub fn random_passive(rng: &mut impl Rng) -> Option<SMatrix> {
    let disk = |rng: &mut dyn rand::RngCore| {
        let r = rng.gen::<f64>().sqrt();
        Complex::from_polar(r, TAU * rng.gen::<f64>())
    };
    for _ in 0..PASSIVE_DRAWS {
        let (s11, s21, s22) = (disk(rng), disk(rng), disk(rng));
        let s = SMatrix::new(s11, s21, s21, s22);
        if s.spectral_norm() <= 1.0 {
            return Some(s);
        }
    }
    None
}

struct Member<'a> {
    netlist: &'a Netlist,
    part: Partition,
    params: Vec<DesignParameter>,
}

/// Residual features of `n`, leaving out the switches fixed by target
/// conditions.
fn residual_structure(n: &Netlist, part: &Partition, conditioned: &[&str]) -> Result<Vec<ResidualParam>, DatasetError> {
    let params = enumerate_parameters(n)?;
    for s in conditioned {
        let residual_switch = part.residual_params.iter().any(|(name, _)| name == s)
            && matches!(n.entry(s).map(|e| &e.kind), Some(EntryKind::Switch(_)));
        if !residual_switch {
            return Err(DatasetError::InvalidTargets(format!("{s} is not a residual switch of {}", n.name)));
        }
    }
    Ok(part
        .residual_params
        .iter()
        .filter(|(name, _)| !conditioned.contains(&name.as_str()))
        .map(|(name, _)| match n.entry(name).map(|e| &e.kind) {
            Some(EntryKind::Switch(_)) => ResidualParam::Switch { name: name.clone() },
            _ => ResidualParam::Value(params.iter().find(|p| &p.name == name).expect("sizable residual").clone()),
        })
        .collect())
}

/// Main-model rows over a family of topologies sharing their residual
/// structure. Targets are computed from the stored (encoded) S blocks, so
/// every row is reproducible from its own features. Each row carries every
/// figure of `targets` under each of its switch conditions.
pub fn gen_main_dataset(
    family: &[Netlist],
    cfg: &SamplerConfig,
    f: Frequency,
    z0: ReferenceImpedance,
    encoding: Encoding,
    targets: &TargetSpec,
) -> Result<Dataset, DatasetError> {
    if cfg.count == 0 {
        return Err(DatasetError::EmptyCount);
    }
    targets.validate()?;
    let conditioned = targets.switch_names();
    let first = family.first().ok_or(DatasetError::EmptyFamily)?;
    let mut members = Vec::with_capacity(family.len());
    for n in family {
        let part = partition(n)?;
        let params = enumerate_parameters(n)?.into_iter().filter(|p| p.owner != Owner::Residual).collect();
        members.push(Member { netlist: n, part, params });
    }
    let n_net = members[0].part.enetworks.len();
    let residual = residual_structure(first, &members[0].part, &conditioned)?;
    for m in &members[1..] {
        if m.part.enetworks.len() != n_net {
            return Err(DatasetError::InconsistentFamily(format!(
                "{} has {} E-networks, {} has {n_net}",
                m.netlist.name,
                m.part.enetworks.len(),
                first.name
            )));
        }
        if residual_structure(m.netlist, &m.part, &conditioned)? != residual {
            return Err(DatasetError::InconsistentFamily(format!(
                "{} and {} have different residual parameters",
                m.netlist.name, first.name
            )));
        }
    }

    let sample_residual = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        residual
            .iter()
            .map(|r| match r {
                ResidualParam::Value(p) => sample_value(p, cfg.strategy, rng),
                ResidualParam::Switch { .. } => f64::from(u8::from(rng.gen_bool(0.5))),
            })
            .collect()
    };
    let finish = |m: &Member, topology: usize, blocks: Vec<SMatrix>, x_r: Vec<f64>, params: Vec<f64>| {
        let mut features: Vec<f64> = blocks.iter().flat_map(|s| encoding.encode(s)).collect();
        let stored: Vec<SMatrix> = features.chunks(encoding.width()).map(|c| encoding.decode(c)).collect();
        let mut y = Vec::with_capacity(targets.conditions.len() * targets.pois.len());
        for c in &targets.conditions {
            let poi = block_poi(m.netlist, &m.part, &residual, &stored, &x_r, c, f, z0)?;
            for &t in &targets.pois {
                y.push(target_value(&poi, t).map_err(|e| format!("{e} at {}", super::condition_label(c)))?);
            }
        }
        features.extend_from_slice(&x_r);
        Ok(Row { topology, features, targets: y, params })
    };

    let rows = match cfg.source {
        SSource::FromTopologies => generate_rows(cfg.count, cfg.seed, |rng| {
            let t = rng.gen_range(0..members.len());
            let m = &members[t];
            let x: Vec<f64> = m.params.iter().map(|p| sample_value(p, cfg.strategy, rng)).collect();
            let values: ParamValues = m.params.iter().map(|p| p.name.clone()).zip(x.iter().copied()).collect();
            let x_r = sample_residual(rng);
            let blocks = m
                .part
                .enetworks
                .iter()
                .map(|e| mna_two_port(&apply_values(&e.subcircuit, &values), f, z0))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| e.to_string())?;
            finish(m, t, blocks, x_r, x)
        })?,
        SSource::SyntheticPassive => generate_rows(cfg.count, cfg.seed, |rng| {
            let blocks = (0..n_net)
                .map(|_| random_passive(rng).ok_or_else(|| "passivity rejection budget exhausted".to_string()))
                .collect::<Result<Vec<_>, _>>()?;
            let x_r = sample_residual(rng);
            finish(&members[0], 0, blocks, x_r, Vec::new())
        })?,
    };

    let topologies = match cfg.source {
        SSource::FromTopologies => members
            .iter()
            .map(|m| TopologyInfo {
                name: m.netlist.name.clone(),
                key: m.part.topology_key(),
                enetwork_labels: m.part.enetworks.iter().map(|e| e.label.clone()).collect(),
                enetwork_keys: m.part.enetworks.iter().map(|e| e.topology_key.clone()).collect(),
                params: m.params.clone(),
            })
            .collect(),
        SSource::SyntheticPassive => vec![TopologyInfo {
            name: format!("synthetic:{}", first.name),
            key: "synthetic".into(),
            enetwork_labels: members[0].part.enetworks.iter().map(|e| e.label.clone()).collect(),
            enetwork_keys: Vec::new(),
            params: Vec::new(),
        }],
    };
    let mut feature_names: Vec<String> = members[0]
        .part
        .enetworks
        .iter()
        .enumerate()
        .flat_map(|(j, _)| encoding.names(&format!("net{}", j + 1)))
        .collect();
    feature_names.extend(residual.iter().map(|r| r.name().to_string()));
    let mut feature_scales = vec![Scale::Linear; n_net * encoding.width()];
    feature_scales.extend(residual.iter().map(ResidualParam::scale));

    let header = DatasetHeader {
        schema: SCHEMA.into(),
        kind: DatasetKind::Main,
        frequency_hz: f.hz(),
        z0: z0.ohms(),
        seed: cfg.seed,
        source: cfg.source,
        encoding,
        topologies,
        n_enetworks: n_net,
        residual,
        feature_names,
        feature_scales,
        target_names: targets.column_names(),
        conditions: if conditioned.is_empty() { Vec::new() } else { targets.conditions.clone() },
    };
    Ok(Dataset { header, rows })
}
