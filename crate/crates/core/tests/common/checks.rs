//! Whole-corpus comparisons against the oracles, and the invariant suite.

use std::collections::{BTreeMap, HashSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use txgraph::analytics::{degree_ccdf, RankOrder, TagMap};
use txgraph::ingest::{load_dataset, Dataset, LoadFilter, LoadReport, SourceBatch, View};
use txgraph::pipeline::{analyze, Analysis, AnalysisParams};
use txgraph::synth::{generate, SynthCorpus};
use txgraph::tempgraph::{
    build_window_graphs, DegreeTable, Direction, FirstDayConvention, Metric, WindowSpec,
};
use txgraph::{Address, Transaction, TxHash};

use super::*;

pub const METRICS: [Metric; 2] = [Metric::Distinct, Metric::TxCount];
pub const DIRECTIONS: [Direction; 3] = [Direction::In, Direction::Out, Direction::Total];
pub const VIEWS: [View; 2] = [View::Full, View::Flashbots];
pub const K: usize = 10;

pub struct Case {
    pub corpus: SynthCorpus,
    pub ds: Dataset,
    pub report: LoadReport,
    pub seed: HashSet<Address>,
}

pub fn case(seed: u64, max_transactions: usize) -> Case {
    let corpus = generate(&random_config(seed, max_transactions));
    let (ds, report) = load_dataset(
        vec![SourceBatch {
            descriptor: format!("synthetic-{seed}"),
            transactions: corpus.transactions.clone(),
        }],
        Some(&corpus.manifest),
        LoadFilter::default(),
    );
    let seed_set = corpus.seed_accounts.iter().copied().collect();
    Case {
        corpus,
        ds,
        report,
        seed: seed_set,
    }
}

fn params(
    view: View,
    metric: Metric,
    direction: Direction,
    order: RankOrder,
    first_day: FirstDayConvention,
) -> AnalysisParams {
    AnalysisParams {
        windows: WindowSpec::weeks(None, None),
        days: WindowSpec::days(None, None),
        metric,
        direction,
        k: K,
        view,
        pairs: None,
        first_day,
        order,
    }
}

fn table_map(t: &DegreeTable) -> BTreeMap<Address, (u64, u64, u64)> {
    t.iter()
        .map(|r| (r.account, (r.indegree, r.outdegree, r.total)))
        .collect()
}

fn run(c: &Case, p: &AnalysisParams) -> Result<Analysis, String> {
    analyze(&c.ds, &c.seed, &TagMap::bundled(), p).map_err(|e| e.to_string())
}

/// Compares every analytics product for one corpus with the oracles.
pub fn check_oracles(seed: u64, max_transactions: usize) -> Result<(), String> {
    let c = case(seed, max_transactions);
    let txs = oracle_dedup(&c.corpus.transactions);
    if txs.len() != c.ds.len() {
        return Err(format!(
            "seed {seed}: dedup kept {} vs oracle {}",
            c.ds.len(),
            txs.len()
        ));
    }
    let fb: HashSet<TxHash> = c.corpus.manifest.iter().map(|(_, h)| h).collect();
    let Some(anchor) = txs.iter().map(|t| utc_date(t.timestamp)).min() else {
        return Ok(());
    };
    let n_days = open_window_count(&txs, anchor, 1);
    let n_weeks = open_window_count(&txs, anchor, 7);

    for view in VIEWS {
        let members: Vec<&Transaction> = txs
            .iter()
            .filter(|t| view == View::Full || fb.contains(&t.hash))
            .collect();
        let days = oracle_windows(members.iter().copied(), anchor, 1, n_days);
        let weeks = oracle_windows(members.iter().copied(), anchor, 7, n_weeks);

        for conv in [
            FirstDayConvention::SeedInclusive,
            FirstDayConvention::ExcludeSeed,
        ] {
            let an = run(
                &c,
                &params(
                    view,
                    Metric::Distinct,
                    Direction::Total,
                    RankOrder::Top,
                    conv,
                ),
            )?;
            if an.volume.counts() != oracle_volume(&days) {
                return Err(format!("seed {seed} {view:?}: volume differs"));
            }
            let got: Vec<(u64, u64, u64)> = an
                .activity
                .days
                .iter()
                .map(|d| (d.cumulative, d.new, d.active))
                .collect();
            let want = oracle_activity(&days, &c.seed, conv == FirstDayConvention::ExcludeSeed);
            if got != want {
                return Err(format!("seed {seed} {view:?} {conv:?}: activity differs"));
            }
        }

        for metric in METRICS {
            let oracle_tables: Vec<_> = weeks.iter().map(|w| oracle_degrees(w, metric)).collect();
            for direction in DIRECTIONS {
                for order in [RankOrder::Top, RankOrder::Bottom] {
                    let an = run(
                        &c,
                        &params(
                            view,
                            metric,
                            direction,
                            order,
                            FirstDayConvention::SeedInclusive,
                        ),
                    )?;
                    if an.tables.len() != oracle_tables.len() {
                        return Err(format!(
                            "seed {seed}: {} windows vs oracle {}",
                            an.tables.len(),
                            oracle_tables.len()
                        ));
                    }
                    for (t, (got, want)) in an.tables.iter().zip(&oracle_tables).enumerate() {
                        if &table_map(got) != want {
                            return Err(format!(
                                "seed {seed} {view:?} {metric:?}: degree table {} differs",
                                t + 1
                            ));
                        }
                        for dir in [Direction::In, Direction::Out] {
                            let pts: Vec<(u64, f64)> = degree_ccdf(got, dir)
                                .iter()
                                .map(|p| (p.degree, p.fraction))
                                .collect();
                            let degs: Vec<u64> = want.values().map(|d| pick(*d, dir)).collect();
                            if pts != oracle_ccdf(&degs) {
                                return Err(format!("seed {seed} {view:?} {metric:?}: ccdf {dir:?} window {} differs", t + 1));
                            }
                        }
                    }
                    for g in &an.growth {
                        let want = oracle_growth(
                            &oracle_tables[g.prev - 1],
                            &oracle_tables[g.next - 1],
                            direction,
                        );
                        let got: BTreeMap<Address, (u64, u64, i64)> = g
                            .records
                            .iter()
                            .map(|r| (r.account, (r.degree_prev, r.degree_next, r.delta)))
                            .collect();
                        if got != want {
                            return Err(format!("seed {seed} {view:?} {metric:?} {direction:?}: growth {}→{} differs", g.prev, g.next));
                        }
                        let ranked: Vec<Address> = g.ranked.iter().map(|r| r.account).collect();
                        if ranked != oracle_rank(&want, K, order == RankOrder::Bottom) {
                            return Err(format!(
                                "seed {seed} {view:?} {metric:?} {direction:?} {order:?}: ranking {}→{} differs",
                                g.prev, g.next
                            ));
                        }
                    }
                }
            }
        }
    }
    Ok(())
}

fn ensure(cond: bool, what: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(what())
    }
}

/// Structural invariants that must hold for any corpus.
pub fn check_invariants(seed: u64, max_transactions: usize) -> Result<(), String> {
    let c = case(seed, max_transactions);
    let full = run(
        &c,
        &params(
            View::Full,
            Metric::TxCount,
            Direction::Total,
            RankOrder::Top,
            FirstDayConvention::SeedInclusive,
        ),
    )?;
    let fb = run(
        &c,
        &params(
            View::Flashbots,
            Metric::TxCount,
            Direction::Total,
            RankOrder::Top,
            FirstDayConvention::SeedInclusive,
        ),
    )?;
    let distinct = run(
        &c,
        &params(
            View::Full,
            Metric::Distinct,
            Direction::Total,
            RankOrder::Top,
            FirstDayConvention::SeedInclusive,
        ),
    )?;

    let graphs = build_window_graphs(&c.ds, &full.windows);
    for (g, t) in graphs.iter().zip(&full.tables) {
        let (si, so) = (t.sum(Direction::In), t.sum(Direction::Out));
        ensure(si == so && so == g.tx_total(), || {
            format!(
                "seed {seed}: window {} sums in={si} out={so} tx_total={}",
                g.index(),
                g.tx_total()
            )
        })?;
    }
    for (tc, td) in full.tables.iter().zip(&distinct.tables) {
        for r in td.iter() {
            for dir in DIRECTIONS {
                ensure(r.get(dir) <= tc.degree(&r.account, dir), || {
                    format!(
                        "seed {seed}: distinct {dir:?} degree exceeds txcount for {}",
                        r.account
                    )
                })?;
            }
        }
    }
    let days = &full.activity.days;
    for (i, d) in days.iter().enumerate() {
        ensure(d.active <= d.cumulative, || {
            format!("seed {seed}: active > cumulative on {}", d.date)
        })?;
        if i > 0 {
            let prev = days[i - 1].cumulative;
            ensure(d.cumulative >= prev, || {
                format!("seed {seed}: cumulative decreased on {}", d.date)
            })?;
            ensure(d.new == d.cumulative - prev, || {
                format!("seed {seed}: new != N_t - N_t-1 on {}", d.date)
            })?;
        }
    }
    let (cv, fv) = (full.volume.counts(), fb.volume.counts());
    ensure(
        cv.len() == fv.len() && cv.iter().zip(&fv).all(|(a, b)| b <= a),
        || format!("seed {seed}: flashbots volume exceeds full volume"),
    )?;
    ensure(
        full.activity
            .days
            .iter()
            .zip(&fb.activity.days)
            .all(|(a, b)| b.active <= a.active),
        || format!("seed {seed}: flashbots active count exceeds full"),
    )?;
    for t in full.tables.iter().chain(&distinct.tables) {
        for dir in DIRECTIONS {
            let pts = degree_ccdf(t, dir);
            ensure(pts.first().is_none_or(|p| p.fraction == 1.0), || {
                format!("seed {seed}: ccdf does not start at 1")
            })?;
            ensure(
                pts.windows(2)
                    .all(|w| w[1].fraction <= w[0].fraction && w[1].degree > w[0].degree),
                || format!("seed {seed}: ccdf not non-increasing"),
            )?;
        }
    }

    // Permutation invariance: shuffled records split over several batches.
    let mut shuffled = c.corpus.transactions.clone();
    shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed.wrapping_add(1)));
    let third = shuffled.len() / 3;
    let rest = shuffled.split_off(third);
    let (mid, last) = rest.split_at(rest.len() / 2);
    let batches = vec![
        SourceBatch {
            descriptor: "c".into(),
            transactions: last.to_vec(),
        },
        SourceBatch {
            descriptor: "a".into(),
            transactions: shuffled,
        },
        SourceBatch {
            descriptor: "b".into(),
            transactions: mid.to_vec(),
        },
    ];
    let (ds2, _) = load_dataset(batches, Some(&c.corpus.manifest), LoadFilter::default());
    let c2 = Case {
        corpus: c.corpus.clone(),
        ds: ds2,
        report: c.report.clone(),
        seed: c.seed.clone(),
    };
    for (p, base) in [
        (
            params(
                View::Full,
                Metric::TxCount,
                Direction::Total,
                RankOrder::Top,
                FirstDayConvention::SeedInclusive,
            ),
            &full,
        ),
        (
            params(
                View::Full,
                Metric::Distinct,
                Direction::Total,
                RankOrder::Top,
                FirstDayConvention::SeedInclusive,
            ),
            &distinct,
        ),
    ] {
        let again = run(&c2, &p)?;
        ensure(again.tables == base.tables, || {
            format!("seed {seed}: degree tables depend on input order")
        })?;
        let ranked = |a: &Analysis| {
            a.growth
                .iter()
                .map(|g| g.ranked.clone())
                .collect::<Vec<_>>()
        };
        ensure(ranked(&again) == ranked(base), || {
            format!("seed {seed}: top-k depends on input order")
        })?;
        ensure(
            again.volume == base.volume && again.activity == base.activity,
            || format!("seed {seed}: series depend on input order"),
        )?;
    }
    Ok(())
}
