mod io;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand};
use clairvoyant::classify::{classify, find_pivot_double_edge, find_pivot_nonpath};
use clairvoyant::covering::{build_covering_walk, verify_covering_walk, CoveringSpec};
use clairvoyant::cycle::{
    blocking_events, check_states, count_confined_walks, event_probability, survival_experiment, winding_events, winding_trace,
    CycleOrientation,
};
use clairvoyant::estimate::estimate_evasiveness;
use clairvoyant::evasive::{build_evasive_k5, build_evasive_t26, build_evasive_t29, enumeration_walk, Construction};
use clairvoyant::excursion::excursion_stats;
use clairvoyant::schedule::{max_advance, ReachSet, Target};
use clairvoyant::variants::{
    check_directed_hypothesis, gamma_components, run_colored_demon, run_directed_demon, ColoredOptions, PurpleCase,
    StrategyOutcome, Token,
};
use clairvoyant::walk::{parse_walk, RandomSource};
use clairvoyant::{Graph, Walk};
use rand::Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::io::{load_walk, write_walk, GraphFile, LoadedGraph, Report};

/// Dev-mode switch; only then is `CLAIRVOYANT_SEED` read as a default seed.
const DEV_ENV: &str = "CLAIRVOYANT_DEV";
const SEED_ENV: &str = "CLAIRVOYANT_SEED";

#[derive(Parser)]
#[command(name = "clairvoyant", version, about = "Clairvoyant-demon scheduling experiments")]
struct Cli {
    /// Worker threads for trial loops. Reports do not depend on it.
    #[arg(long, global = true)]
    parallel: Option<usize>,
    /// Single-line JSON instead of pretty-printed.
    #[arg(long, global = true)]
    compact: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Family membership and whether (strongly) evasive walks exist.
    Classify {
        #[arg(long)]
        graph: PathBuf,
    },
    /// Decide whether two walks can be scheduled without collision.
    Schedule(ScheduleArgs),
    #[command(subcommand)]
    Covering(CoveringCmd),
    #[command(subcommand)]
    Construct(ConstructCmd),
    #[command(subcommand)]
    Stats(StatsCmd),
    #[command(subcommand)]
    Cycle(CycleCmd),
    #[command(subcommand)]
    Variant(VariantCmd),
    #[command(subcommand)]
    Estimate(EstimateCmd),
}

#[derive(Args)]
struct ScheduleArgs {
    #[arg(long)]
    graph: PathBuf,
    /// Walk file for R.
    #[arg(long, required_unless_present = "r_text", conflicts_with = "r_text")]
    r: Option<PathBuf>,
    /// R given inline, e.g. "A B C".
    #[arg(long)]
    r_text: Option<String>,
    #[arg(long, required_unless_present = "s_text", conflicts_with = "s_text")]
    s: Option<PathBuf>,
    #[arg(long)]
    s_text: Option<String>,
    /// `both`, `first`, or `min:N`.
    #[arg(long, default_value = "both", value_parser = parse_target)]
    target: Target,
}

#[derive(Args)]
struct SubgraphArgs {
    #[arg(long)]
    graph: PathBuf,
    /// Vertices of the subgraph, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    sub: Vec<String>,
    #[arg(long)]
    l: usize,
    /// Cap on the number of target walks enumerated.
    #[arg(long)]
    walk_cap: Option<u128>,
}

#[derive(Subcommand)]
enum CoveringCmd {
    /// Build a covering walk for the subgraph.
    Build {
        #[command(flatten)]
        sub: SubgraphArgs,
        /// Start and end at a subgraph neighbor of this subgraph vertex.
        #[arg(long)]
        anchor: Option<String>,
        /// Write the walk here instead of into the report.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check that a walk is a covering walk.
    Verify {
        #[command(flatten)]
        sub: SubgraphArgs,
        #[arg(long, required_unless_present = "walk_text", conflicts_with = "walk_text")]
        walk: Option<PathBuf>,
        #[arg(long)]
        walk_text: Option<String>,
    },
}

#[derive(Args)]
struct ConstructArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long, default_value_t = 10_000)]
    prefix: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum ConstructCmd {
    /// Evasive walk from a pivot with a non-path component.
    T26(ConstructArgs),
    /// Strongly evasive walk from a pivot with a double edge.
    T29(ConstructArgs),
    /// Rotating-triangle walk on the complete graph K_n (vertices v1..vn).
    K5 {
        #[arg(long, default_value_t = 5)]
        n: usize,
        #[arg(long, default_value_t = 10_000)]
        prefix: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the K_n graph file, for use with the walk.
        #[arg(long)]
        graph_out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum StatsCmd {
    /// Exact excursion-length distribution of a random walk from a vertex.
    Excursion {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        vertex: String,
        #[arg(long)]
        anchor: String,
        #[arg(long, default_value_t = 32)]
        l_max: usize,
    },
}

#[derive(Subcommand)]
enum CycleCmd {
    /// Survival fraction of random pairs on C_n against the horizon.
    Survive {
        #[arg(long, default_value_t = 4)]
        n: usize,
        #[arg(long, value_delimiter = ',', required = true)]
        horizons: Vec<usize>,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 100_000)]
        max_horizon: usize,
        /// Also estimate Pr(E_k) for k = 1..=K (R's winding strongly
        /// increases at k while S's decreases at k).
        #[arg(long, default_value_t = 0)]
        events: i64,
        /// Walk length, in vertices, for the event estimates.
        #[arg(long, default_value_t = 1000)]
        event_length: usize,
    },
    /// Winding traces, and the winding relation over all reachable states.
    Winding {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, required_unless_present = "r_text", conflicts_with = "r_text")]
        r: Option<PathBuf>,
        #[arg(long)]
        r_text: Option<String>,
        #[arg(long, conflicts_with = "s_text")]
        s: Option<PathBuf>,
        #[arg(long)]
        s_text: Option<String>,
    },
    /// Exact count of +-1 walks confined to [-r, r].
    Confined {
        #[arg(long)]
        steps: usize,
        #[arg(long)]
        radius: usize,
        #[arg(long, default_value_t = 10_000)]
        max_steps: usize,
    },
}

#[derive(Args)]
struct VariantArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 100)]
    runs: u64,
    #[arg(long, default_value_t = 10_000)]
    horizon: usize,
    /// Longest allowed stay inside one component.
    #[arg(long, default_value_t = 50)]
    window: usize,
    #[arg(long, default_value_t = 100)]
    chunk: usize,
}

#[derive(Subcommand)]
enum VariantCmd {
    /// Graphs with one-way edges.
    Directed(VariantArgs),
    /// Red/blue edge-colored graphs.
    Colored {
        #[command(flatten)]
        common: VariantArgs,
        #[arg(long, default_value_t = 8)]
        window_slack: usize,
        /// Accept a purple subgraph with a single component.
        #[arg(long)]
        relax: bool,
        /// Case 2: draw the restricted walk at random instead of the
        /// enumeration walk.
        #[arg(long)]
        random_restricted: bool,
        /// Case 2: length of the restricted walk, as a multiple of the horizon.
        #[arg(long, default_value_t = 20)]
        restricted_factor: usize,
    },
}

#[derive(Subcommand)]
enum EstimateCmd {
    /// Fraction of random walks R that can be scheduled against S.
    Evasive {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, required_unless_present = "walk_text", conflicts_with = "walk_text")]
        walk: Option<PathBuf>,
        #[arg(long)]
        walk_text: Option<String>,
        #[arg(long)]
        horizon: usize,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        #[arg(long)]
        seed: Option<u64>,
        /// Force the first vertex of R.
        #[arg(long)]
        condition: Option<String>,
        #[arg(long, default_value_t = 100_000)]
        max_horizon: usize,
    },
}

/// Bad input; exits with status 2 like every error except a missing pivot.
fn usage(msg: impl Into<String>) -> anyhow::Error {
    anyhow!(msg.into())
}

struct Done {
    report: Report,
    summary: String,
    ok: bool,
}

fn parse_target(s: &str) -> std::result::Result<Target, String> {
    match s {
        "both" => Ok(Target::BothToEnd),
        "first" => Ok(Target::FirstToEnd),
        _ => s
            .strip_prefix("min:")
            .and_then(|n| n.parse().ok())
            .map(Target::MinAdvance)
            .ok_or_else(|| format!("expected `both`, `first` or `min:N`, got `{s}`")),
    }
}

fn seed_or_dev(seed: Option<u64>) -> Result<u64> {
    if let Some(s) = seed {
        return Ok(s);
    }
    if std::env::var(DEV_ENV).as_deref() == Ok("1") {
        if let Ok(v) = std::env::var(SEED_ENV) {
            return v.parse().map_err(|_| usage(format!("{SEED_ENV} is not an integer: `{v}`")));
        }
    }
    Err(usage("this command is randomized and requires --seed"))
}

fn walk_arg(g: &Arc<Graph>, file: Option<&Path>, text: Option<&str>) -> Result<Walk> {
    match (file, text) {
        (Some(p), _) => load_walk(g, p),
        (None, Some(t)) => Ok(parse_walk(g, t)?),
        (None, None) => Err(usage("missing walk")),
    }
}

fn names(g: &Graph, vs: &[usize]) -> Vec<String> {
    vs.iter().map(|&v| g.name(v).to_string()).collect()
}

fn cmd_classify(path: &Path) -> Result<Done> {
    let lg = GraphFile::load(path)?;
    let g = &lg.graph;
    let class = classify(g)?;
    let pivot = |w: Option<clairvoyant::classify::PivotWitness>| {
        w.map(|w| {
            json!({
                "pivot": g.name(w.pivot),
                "component": names(g, &w.component),
                "anchor": w.anchor.map(|a| g.name(a)),
            })
        })
    };
    let result = json!({
        "class": class,
        "nonpath_pivot": pivot(find_pivot_nonpath(g)?),
        "double_edge_pivot": pivot(find_pivot_double_edge(g)?),
    });
    Ok(Done {
        summary: format!(
            "evasive walks exist: {}; strongly evasive walks exist: {}",
            class.evasive_exists, class.strong_evasive_exists
        ),
        report: Report::new("classify", lg.summary(), json!({}), result),
        ok: true,
    })
}

fn cmd_schedule(a: &ScheduleArgs) -> Result<Done> {
    let lg = GraphFile::load(&a.graph)?;
    let r = walk_arg(&lg.graph, a.r.as_deref(), a.r_text.as_deref())?;
    let s = walk_arg(&lg.graph, a.s.as_deref(), a.s_text.as_deref())?;
    let res = max_advance(&r, &s, a.target)?;
    let summary = if res.success {
        format!("schedulable: target state {:?}", res.target_state)
    } else {
        format!(
            "not schedulable: best frontier {}, blocking prefix {:?}",
            res.best_frontier, res.blocking_prefix_length
        )
    };
    Ok(Done {
        ok: res.success,
        summary,
        report: Report::new(
            "schedule",
            lg.summary(),
            json!({"target": a.target, "r_length": r.len(), "s_length": s.len()}),
            serde_json::to_value(&res)?,
        ),
    })
}

fn covering_spec(lg: &LoadedGraph, a: &SubgraphArgs) -> Result<CoveringSpec> {
    let sub = a.sub.iter().map(|n| lg.graph.vertex(n)).collect::<clairvoyant::Result<Vec<_>>>()?;
    let mut spec = CoveringSpec::new(lg.graph.clone(), sub, a.l)?;
    if let Some(cap) = a.walk_cap {
        spec = spec.with_walk_cap(cap);
    }
    Ok(spec)
}

fn cmd_covering(c: &CoveringCmd) -> Result<Done> {
    match c {
        CoveringCmd::Build { sub, anchor, out } => {
            let lg = GraphFile::load(&sub.graph)?;
            let mut spec = covering_spec(&lg, sub)?;
            if let Some(w) = anchor {
                spec = spec.with_anchor(lg.graph.vertex(w)?)?;
            }
            let walk = build_covering_walk(&spec)?;
            let mut result = json!({"length": walk.len()});
            match out {
                Some(p) => write_walk(&walk, p)?,
                None => result["walk"] = walk.to_string().into(),
            }
            Ok(Done {
                summary: format!("covering walk of length {}", walk.len()),
                report: Report::new(
                    "covering build",
                    lg.summary(),
                    json!({"sub": sub.sub, "l": sub.l, "anchor": anchor}),
                    result,
                ),
                ok: true,
            })
        }
        CoveringCmd::Verify { sub, walk, walk_text } => {
            let lg = GraphFile::load(&sub.graph)?;
            let spec = covering_spec(&lg, sub)?;
            let w = walk_arg(&lg.graph, walk.as_deref(), walk_text.as_deref())?;
            let rep = verify_covering_walk(&w, &spec)?;
            let uncovered = rep.uncovered.as_ref().map(|u| names(&lg.graph, u));
            let summary = match &uncovered {
                None => format!("covers all {} walks of length <= {}", rep.targets, sub.l),
                Some(u) => format!("no allowed subwalk for {}", u.join(" ")),
            };
            Ok(Done {
                ok: rep.covered,
                summary,
                report: Report::new(
                    "covering verify",
                    lg.summary(),
                    json!({"sub": sub.sub, "l": sub.l, "walk_length": w.len()}),
                    json!({"covered": rep.covered, "targets": rep.targets, "uncovered": uncovered}),
                ),
            })
        }
    }
}

fn construction_report(c: &Construction, out: Option<&Path>) -> Result<Value> {
    let g = c.walk.graph();
    let mut result = json!({
        "recipe": c.recipe,
        "pivot_name": c.recipe.pivot.as_ref().map(|p| g.name(p.pivot)),
        "length": c.walk.len(),
        "blocks": c.blocks,
        "factors": c.factors,
        "q": c.q,
        "analytic_bound": c.analytic_bound(),
    });
    match out {
        Some(p) => write_walk(&c.walk, p)?,
        None => result["walk"] = c.walk.to_string().into(),
    }
    Ok(result)
}

fn cmd_construct(c: &ConstructCmd) -> Result<Done> {
    let (name, lg, cons, out) = match c {
        ConstructCmd::T26(a) | ConstructCmd::T29(a) => {
            let lg = GraphFile::load(&a.graph)?;
            let cons = if matches!(c, ConstructCmd::T26(_)) {
                build_evasive_t26(&lg.graph, a.prefix)?
            } else {
                build_evasive_t29(&lg.graph, a.prefix)?
            };
            let name = if matches!(c, ConstructCmd::T26(_)) { "t26" } else { "t29" };
            (name, Some(lg), cons, a.out.as_deref())
        }
        ConstructCmd::K5 {
            n,
            prefix,
            out,
            graph_out,
        } => {
            let cons = build_evasive_k5(*n, *prefix)?;
            if let Some(p) = graph_out {
                let text = serde_json::to_string_pretty(&GraphFile::from_graph(cons.walk.graph()))?;
                std::fs::write(p, text + "\n").with_context(|| format!("writing {}", p.display()))?;
            }
            ("k5", None, cons, out.as_deref())
        }
    };
    let graph = match &lg {
        Some(lg) => lg.summary(),
        None => json!({"vertices": cons.walk.graph().len(), "edges": cons.walk.graph().edge_count()}),
    };
    let result = construction_report(&cons, out)?;
    Ok(Done {
        summary: format!(
            "{name}: walk of length {}, {} blocks, analytic bound {:?}",
            cons.walk.len(),
            cons.blocks.len(),
            cons.analytic_bound()
        ),
        report: Report::new(&format!("construct {name}"), graph, json!({}), result),
        ok: true,
    })
}

fn cmd_stats(c: &StatsCmd) -> Result<Done> {
    let StatsCmd::Excursion {
        graph,
        vertex,
        anchor,
        l_max,
    } = c;
    let lg = GraphFile::load(graph)?;
    let g = &lg.graph;
    let st = excursion_stats(g, g.vertex(vertex)?, g.vertex(anchor)?, *l_max)?;
    let summary = st.summary(g);
    Ok(Done {
        summary: format!("q = {:.6}, p[{l_max}] = {:.6}", summary.q, summary.p[*l_max]),
        report: Report::new(
            "stats excursion",
            lg.summary(),
            json!({"vertex": vertex, "anchor": anchor, "l_max": l_max}),
            json!({
                "summary": summary,
                "q_exact": st.q.to_string(),
                "pmf_exact": st.pmf.iter().map(|x| x.to_string()).collect::<Vec<_>>(),
            }),
        ),
        ok: true,
    })
}

fn cmd_cycle(c: &CycleCmd) -> Result<Done> {
    match c {
        CycleCmd::Survive {
            n,
            horizons,
            trials,
            seed,
            max_horizon,
            events,
            event_length,
        } => {
            let seed = seed_or_dev(*seed)?;
            if let Some(h) = horizons.iter().chain([event_length]).find(|&&h| h > *max_horizon) {
                return Err(usage(format!("length {h} exceeds --max-horizon {max_horizon}")));
            }
            let rep = survival_experiment(*n, horizons, *trials, RandomSource::new(seed))?;
            let event_estimates = (1..=*events)
                .map(|k| {
                    let src = RandomSource::new(seed).substream(1 << 40 | k as u64);
                    event_probability(*n, k, *event_length, *trials, src).map(|e| json!({"k": k, "estimate": e}))
                })
                .collect::<clairvoyant::Result<Vec<_>>>()?;
            let mut result = serde_json::to_value(&rep)?;
            if *events > 0 {
                result["events"] = event_estimates.into();
            }
            Ok(Done {
                summary: format!(
                    "fractions {:?}; fit slope {:?}, R^2 {:?}",
                    rep.estimates.iter().map(|e| e.estimate.fraction).collect::<Vec<_>>(),
                    rep.fitted_c,
                    rep.fit_r2
                ),
                report: Report::new(
                    "cycle survive",
                    Value::Null,
                    json!({"n": n, "horizons": horizons, "trials": trials, "seed": seed, "events": events, "event_length": event_length}),
                    result,
                ),
                ok: true,
            })
        }
        CycleCmd::Winding {
            graph,
            r,
            r_text,
            s,
            s_text,
        } => {
            let lg = GraphFile::load(graph)?;
            let orient = CycleOrientation::of(&lg.graph)?;
            let rw = walk_arg(&lg.graph, r.as_deref(), r_text.as_deref())?;
            let tr = winding_trace(&rw, &orient, 0)?;
            let ev_r = winding_events(&tr.big_w)?;
            let mut result = json!({"orientation": names(&lg.graph, orient.order()), "r": {"trace": tr, "events": ev_r}});
            let mut ok = true;
            let mut summary = format!("R winds to {}", tr.w.last().copied().unwrap_or(0));
            if s.is_some() || s_text.is_some() {
                let sw = walk_arg(&lg.graph, s.as_deref(), s_text.as_deref())?;
                let ts = winding_trace(&sw, &orient, orient.offset(rw.at(1), sw.at(1)))?;
                let ev_s = winding_events(&ts.big_w)?;
                let sched = max_advance(&rw, &sw, Target::BothToEnd)?;
                let reach = ReachSet::compute(rw.steps(), sw.steps())?;
                let check = check_states(&tr, &ts, reach.states());
                ok = check.holds;
                summary = format!(
                    "{} reachable states, relation holds: {}; schedulable: {}",
                    reach.len(),
                    check.holds,
                    sched.success
                );
                result["s"] = json!({"trace": ts, "events": ev_s});
                result["blocking_events"] = json!(blocking_events(&ev_r, &ev_s));
                result["reachable_states"] = reach.len().into();
                result["relation"] = serde_json::to_value(&check)?;
                result["schedule"] = serde_json::to_value(&sched)?;
            }
            Ok(Done {
                summary,
                report: Report::new("cycle winding", lg.summary(), json!({}), result),
                ok,
            })
        }
        CycleCmd::Confined {
            steps,
            radius,
            max_steps,
        } => {
            if steps > max_steps {
                return Err(usage(format!("--steps {steps} exceeds --max-steps {max_steps}")));
            }
            let c = count_confined_walks(*steps, *radius)?;
            Ok(Done {
                summary: format!(
                    "ln p = {:.6}, ln bound = {:.6}, within bound: {}",
                    c.ln_probability, c.ln_bound, c.within_bound
                ),
                ok: c.within_bound,
                report: Report::new(
                    "cycle confined",
                    Value::Null,
                    json!({"steps": steps, "radius": radius}),
                    serde_json::to_value(&c)?,
                ),
            })
        }
    }
}

fn outcome_json(o: &std::result::Result<StrategyOutcome, String>) -> Value {
    match o {
        Ok(o) => serde_json::to_value(o).unwrap_or(Value::Null),
        Err(e) => json!({"error": e}),
    }
}

fn tally(outs: &[std::result::Result<StrategyOutcome, String>]) -> (Value, bool, String) {
    let errors = outs.iter().filter(|o| o.is_err()).count();
    let ok_runs: Vec<&StrategyOutcome> = outs.iter().filter_map(|o| o.as_ref().ok()).collect();
    let collided = ok_runs.iter().filter(|o| o.collided).count();
    let stalled = ok_runs.iter().filter(|o| o.stalled).count();
    let reached = ok_runs.iter().filter(|o| o.reached_horizon).count();
    let totals = json!({
        "runs": outs.len(),
        "reached_horizon": reached,
        "stalled": stalled,
        "collided": collided,
        "errors": errors,
    });
    let summary = format!(
        "{reached}/{} runs reached the horizon, {stalled} stalled, {collided} collided, {errors} errors",
        outs.len()
    );
    (totals, collided == 0 && errors == 0, summary)
}

fn variant_params(a: &VariantArgs, seed: u64) -> Value {
    json!({"seed": seed, "runs": a.runs, "horizon": a.horizon, "window": a.window, "chunk": a.chunk})
}

fn cmd_variant(c: &VariantCmd) -> Result<Done> {
    match c {
        VariantCmd::Directed(a) => {
            let seed = seed_or_dev(a.seed)?;
            let lg = GraphFile::load(&a.graph)?;
            let dg = lg.directed()?;
            let g = dg.base().clone();
            let hypothesis = check_directed_hypothesis(&dg);
            let comps: Vec<Vec<String>> = gamma_components(&dg).iter().map(|c| names(&g, c)).collect();
            if !hypothesis {
                return Ok(Done {
                    summary: "hypothesis fails: some component of the two-way graph is a path".into(),
                    report: Report::new(
                        "variant directed",
                        lg.summary(),
                        variant_params(a, seed),
                        json!({"hypothesis": false, "components": comps}),
                    ),
                    ok: false,
                });
            }
            let outs: Vec<_> = (0..a.runs)
                .into_par_iter()
                .map(|t| {
                    let mut rng = RandomSource::new(seed).substream(t).rng();
                    let (s, w) = dg.sample_pair(2 * a.horizon + 1, a.window, &mut rng).map_err(|e| e.to_string())?;
                    run_directed_demon(&dg, &s, &w, a.chunk, a.horizon).map_err(|e| e.to_string())
                })
                .collect();
            let (totals, ok, summary) = tally(&outs);
            Ok(Done {
                summary,
                ok,
                report: Report::new(
                    "variant directed",
                    lg.summary(),
                    variant_params(a, seed),
                    json!({
                        "hypothesis": true,
                        "components": comps,
                        "totals": totals,
                        "runs": outs.iter().map(outcome_json).collect::<Vec<_>>(),
                    }),
                ),
            })
        }
        VariantCmd::Colored {
            common: a,
            window_slack,
            relax,
            random_restricted,
            restricted_factor,
        } => {
            let seed = seed_or_dev(a.seed)?;
            let lg = GraphFile::load(&a.graph)?;
            let cg = lg.colored()?;
            let g = cg.base().clone();
            let case = cg.purple_case(*relax)?;
            let mut params = variant_params(a, seed);
            params["window_slack"] = (*window_slack).into();
            params["relax"] = (*relax).into();
            params["random_restricted"] = (*random_restricted).into();
            params["restricted_factor"] = (*restricted_factor).into();
            let comps: Vec<Vec<String>> = cg.purple_components().iter().map(|c| names(&g, c)).collect();
            if case == PurpleCase::NotApplicable {
                return Ok(Done {
                    summary: "hypothesis fails: the purple subgraph is connected".into(),
                    report: Report::new(
                        "variant colored",
                        lg.summary(),
                        params,
                        json!({"case": case, "purple_components": comps}),
                    ),
                    ok: false,
                });
            }
            let opts = ColoredOptions {
                chunk: a.chunk,
                window_slack: *window_slack,
                relax: *relax,
            };
            // The restricted walk of Case 2 does not depend on the run.
            let fixed = match (&case, random_restricted) {
                (PurpleCase::Case2 { token, component }, false) => {
                    let restricted = match token {
                        Token::S => cg.red(),
                        Token::T => cg.blue(),
                    };
                    let x = enumeration_walk(restricted, component, restricted_factor * a.horizon)?;
                    Some(Walk::new(g.clone(), x.into_steps())?)
                }
                _ => None,
            };
            let outs: Vec<_> = (0..a.runs)
                .into_par_iter()
                .map(|t| {
                    let mut rng = RandomSource::new(seed).substream(t).rng();
                    let len = 2 * a.horizon + 1;
                    let (s, w) = match &case {
                        PurpleCase::Case2 { token, component } => {
                            let free = if *token == Token::S { Token::T } else { Token::S };
                            let x = match &fixed {
                                Some(x) => x.clone(),
                                None => {
                                    let start = component[rng.random_range(0..component.len())];
                                    let len = restricted_factor * a.horizon;
                                    cg.sample_walk(*token, start, len, usize::MAX, &mut rng)
                                        .map_err(|e| e.to_string())?
                                }
                            };
                            let y = cg
                                .sample_free_walk(free, component, len, a.window, &mut rng)
                                .map_err(|e| e.to_string())?;
                            if *token == Token::S {
                                (x, y)
                            } else {
                                (y, x)
                            }
                        }
                        _ => cg.sample_pair(len, a.window, &mut rng).map_err(|e| e.to_string())?,
                    };
                    run_colored_demon(&cg, &s, &w, a.horizon, opts).map_err(|e| e.to_string())
                })
                .collect();
            let (totals, ok, summary) = tally(&outs);
            Ok(Done {
                summary: format!("{}: {summary}", serde_json::to_value(&case)?["case"].as_str().unwrap_or("")),
                ok,
                report: Report::new(
                    "variant colored",
                    lg.summary(),
                    params,
                    json!({
                        "case": case,
                        "purple_components": comps,
                        "totals": totals,
                        "runs": outs.iter().map(outcome_json).collect::<Vec<_>>(),
                    }),
                ),
            })
        }
    }
}

fn cmd_estimate(c: &EstimateCmd) -> Result<Done> {
    let EstimateCmd::Evasive {
        graph,
        walk,
        walk_text,
        horizon,
        trials,
        seed,
        condition,
        max_horizon,
    } = c;
    let seed = seed_or_dev(*seed)?;
    if horizon > max_horizon {
        return Err(usage(format!("--horizon {horizon} exceeds --max-horizon {max_horizon}")));
    }
    let lg = GraphFile::load(graph)?;
    let s = walk_arg(&lg.graph, walk.as_deref(), walk_text.as_deref())?;
    let cond = condition.as_deref().map(|v| lg.graph.vertex(v)).transpose()?;
    let est = estimate_evasiveness(&s, *horizon, *trials, RandomSource::new(seed), cond)?;
    let e = &est.estimate;
    Ok(Done {
        summary: format!(
            "{}/{} random walks advanced {horizon} steps; 95% interval [{:.4}, {:.4}]",
            e.successes,
            e.trials,
            e.wilson_low.unwrap_or(f64::NAN),
            e.wilson_high.unwrap_or(f64::NAN)
        ),
        report: Report::new(
            "estimate evasive",
            lg.summary(),
            json!({"horizon": horizon, "trials": trials, "seed": seed, "condition": condition, "walk_length": s.len()}),
            serde_json::to_value(&est)?,
        ),
        ok: true,
    })
}

fn dispatch(cmd: &Cmd) -> Result<Done> {
    match cmd {
        Cmd::Classify { graph } => cmd_classify(graph),
        Cmd::Schedule(a) => cmd_schedule(a),
        Cmd::Covering(c) => cmd_covering(c),
        Cmd::Construct(c) => cmd_construct(c),
        Cmd::Stats(c) => cmd_stats(c),
        Cmd::Cycle(c) => cmd_cycle(c),
        Cmd::Variant(c) => cmd_variant(c),
        Cmd::Estimate(c) => cmd_estimate(c),
    }
}

/// 1 for outcomes of the math (no pivot exists), 2 for bad input.
fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<clairvoyant::Error>() {
        Some(clairvoyant::Error::NoPivot(_)) => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Some(t) = cli.parallel {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let done = dispatch(&cli.cmd).and_then(|d| {
        let text = if cli.compact {
            serde_json::to_string(&d.report)
        } else {
            serde_json::to_string_pretty(&d.report)
        }
        .context("serializing report")?;
        Ok((d, text))
    });
    match done {
        Ok((d, text)) => {
            println!("{text}");
            eprintln!("{}", d.summary);
            ExitCode::from(if d.ok { 0 } else { 1 })
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
