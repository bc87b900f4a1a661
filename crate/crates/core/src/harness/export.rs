use rand::Rng as _;

use super::eval::csv_err;
use crate::agent::{Agent, Cache};
use crate::error::Result;
use crate::ltl::Formula;
use crate::mapping::MappingSpec;
use crate::mdp::TaskableMdp;
use crate::rng::{stream, tag};

/// Rolls out `episodes` episodes on tasks drawn uniformly from `tasks` and
/// returns a CSV table with one row per step: the next pending occurrence,
/// its spec fields and the concatenated state and task embedding the
/// policy saw.
pub fn export_embeddings(agent: &Agent, mdp: &TaskableMdp, tasks: &[Formula], episodes: usize, seed: u64) -> Result<String> {
    let dim = agent.net.arch.embedding_dim();
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> =
        ["episode", "step", "task", "next_occurrence", "spec_kind", "d", "theta", "r_c", "r_d"].map(String::from).to_vec();
    header.extend((0..dim).map(|k| format!("emb_{k}")));
    w.write_record(&header).map_err(csv_err)?;

    let mut cache = Cache::default();
    let mut scratch = Vec::new();
    for ep in 0..episodes {
        let mut rng = stream(seed, &[tag::EXPORT, ep as u64]);
        let task = &tasks[rng.random_range(0..tasks.len())];
        let task_name = task.display(&mdp.symbols).to_string();
        let mut ps = mdp.episode_reset_sampled(task, &mut rng)?;
        loop {
            cache.clear();
            agent.push_features(mdp, &ps, &mut cache, &mut scratch)?;
            agent.net.forward(&agent.params, &mut cache);
            let next = ps.phi.next_pending();
            let spec = next.and_then(|id| ps.spec_set.get(id)).copied().unwrap_or(MappingSpec::None);
            let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
            let (kind, d, theta, r_c, r_d) = match spec {
                MappingSpec::Nav2D { d, theta, r_d } => ("nav2d", Some(d), Some(theta), None, Some(r_d)),
                MappingSpec::Cone3D { d, r_c, theta, r_d } => ("cone3d", Some(d), Some(theta), Some(r_c), Some(r_d)),
                MappingSpec::None => ("none", None, None, None, None),
            };
            let mut record = vec![
                ep.to_string(),
                ps.steps.to_string(),
                task_name.clone(),
                next.map(|id| mdp.symbols.name(id).to_string()).unwrap_or_default(),
                kind.to_string(),
                opt(d),
                opt(theta),
                opt(r_c),
                opt(r_d),
            ];
            record.extend(cache.embedding_row(&agent.net.arch, 0).iter().map(|v| v.to_string()));
            w.write_record(&record).map_err(csv_err)?;
            let sample = agent.sample_row(&cache, 0, &mut rng, false);
            let out = mdp.product_step(&ps, &sample.action)?;
            ps = out.next;
            if out.terminal {
                break;
            }
        }
    }
    let bytes = w.into_inner().map_err(|e| crate::Error::InvalidInput(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
