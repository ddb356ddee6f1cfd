//! `key=value` parameter blocks for the generators.

use std::collections::BTreeMap;
use std::str::FromStr;

use avi_core::problems::{FrictionParams, NepParams, Spectrum};

pub type Params = BTreeMap<String, String>;

pub fn parse_block(text: &str) -> Result<Params, String> {
    let mut out = Params::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        add(&mut out, line).map_err(|e| format!("line {}: {e}", i + 1))?;
    }
    Ok(out)
}

pub fn add(out: &mut Params, item: &str) -> Result<(), String> {
    let (k, v) = item.split_once('=').ok_or_else(|| format!("expected key=value, got {item:?}"))?;
    out.insert(k.trim().to_string(), v.trim().to_string());
    Ok(())
}

struct Reader {
    params: Params,
}

impl Reader {
    fn get<T: FromStr>(&mut self, key: &str, default: T) -> Result<T, String> {
        match self.params.remove(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| format!("bad value for {key}: {v:?}")),
        }
    }

    fn list<T: FromStr>(&mut self, key: &str, default: Vec<T>) -> Result<Vec<T>, String> {
        match self.params.remove(key) {
            None => Ok(default),
            Some(v) => v
                .split(',')
                .map(|x| x.trim().parse().map_err(|_| format!("bad value for {key}: {x:?}")))
                .collect(),
        }
    }

    fn finish(self) -> Result<(), String> {
        match self.params.keys().next() {
            Some(k) => Err(format!("unknown parameter {k:?}")),
            None => Ok(()),
        }
    }
}

pub fn friction(params: Params, seed: u64) -> Result<FrictionParams, String> {
    let d = FrictionParams::default();
    let mut r = Reader { params };
    let out = FrictionParams {
        n_contacts: r.get("contacts", d.n_contacts)?,
        n_dof_per_body: r.get("dof", d.n_dof_per_body)?,
        n_bodies: r.get("bodies", d.n_bodies)?,
        mu: r.list("mu", d.mu)?,
        facets: r.get("facets", d.facets)?,
        condensed: r.get("condensed", d.condensed)?,
        seed: r.get("seed", seed)?,
    };
    r.finish()?;
    Ok(out)
}

pub fn nep(params: Params, seed: u64) -> Result<NepParams, String> {
    let d = NepParams::default();
    let mut r = Reader { params };
    let out = NepParams {
        n_agents: r.get("agents", d.n_agents)?,
        block_sizes: r.list("sizes", d.block_sizes)?,
        coupling: r.get("coupling", d.coupling)?,
        rows_per_agent: r.get("rows", d.rows_per_agent)?,
        compact: r.get("compact", d.compact)?,
        seed: r.get("seed", seed)?,
    };
    r.finish()?;
    Ok(out)
}

pub struct RandomParams {
    pub n: usize,
    pub m: usize,
    pub spectrum: Spectrum,
    pub seed: u64,
}

pub fn random(params: Params, seed: u64) -> Result<RandomParams, String> {
    let mut r = Reader { params };
    let spectrum: String = r.get("spectrum", "indefinite".to_string())?;
    let out = RandomParams {
        n: r.get("n", 10)?,
        m: r.get("m", 3)?,
        spectrum: spectrum.parse().map_err(|e: avi_core::Error| e.to_string())?,
        seed: r.get("seed", seed)?,
    };
    r.finish()?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn block_with_comments() {
        let p = parse_block("# contact\ncontacts = 3\n\nmu=0.2,0.4,0.5\n").unwrap();
        let f = friction(p, 7).unwrap();
        assert_eq!(f.n_contacts, 3);
        assert_eq!(f.mu, vec![0.2, 0.4, 0.5]);
        assert_eq!(f.seed, 7);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let mut p = Params::new();
        add(&mut p, "size=3").unwrap();
        assert!(random(p, 0).is_err());
        assert!(parse_block("novalue").is_err());
    }
}
