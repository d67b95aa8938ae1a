//! Seeded genetic search. Chromosome: per application an accept bit, a route
//! index and per-packet (offset, shift, extra) slot indices. Infeasible
//! decodes are repaired by evicting the most-violating applications until
//! the validator is clean; fitness is the surviving accepted count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::schedule::Schedule;
use crate::validator;

use super::{accept_app, first_fit_app, Ctx, PlacementState, SolveOutcome};

#[derive(Debug, Clone, PartialEq)]
struct Gene {
    accept: bool,
    route: usize,
    /// Per lead packet (message 1): (offset slot, shift slot, extra slot).
    /// Later message instances mirror the lead at period offsets.
    pkts: Vec<(usize, usize, usize)>,
}

type Chromosome = Vec<Gene>;

pub(crate) fn solve(ctx: &Ctx) -> SolveOutcome {
    let params = &ctx.config.ga;
    let pop_size = params.population;
    let elite = 2.min(pop_size);

    // Seed the population with the greedy solution; elitism then guarantees
    // the result is never worse than it.
    let mut population = vec![encode_greedy(ctx)];
    for slot in 1..pop_size {
        let mut rng = stream(params.seed, 0, slot as u64);
        population.push(random_chromosome(ctx, &mut rng));
    }

    let mut best: Option<(usize, Schedule)> = None;
    let mut budget_exhausted = false;
    for gen in 0..params.generations.max(1) {
        let mut scored: Vec<(usize, usize)> = population
            .iter()
            .enumerate()
            .map(|(i, chrom)| {
                let (count, schedule) = evaluate(ctx, chrom);
                if best.as_ref().map_or(true, |(b, _)| count > *b) {
                    best = Some((count, schedule));
                }
                (count, i)
            })
            .collect();
        // Stable sort keeps earlier individuals on ties, so runs are
        // reproducible.
        scored.sort_by(|a, b| b.0.cmp(&a.0));
        if gen + 1 >= params.generations {
            break;
        }
        if ctx.budget_exhausted() {
            budget_exhausted = true;
            break;
        }
        let mut next: Vec<Chromosome> = scored[..elite]
            .iter()
            .map(|&(_, i)| population[i].clone())
            .collect();
        let mut rng = stream(params.seed, gen as u64 + 1, u64::MAX);
        while next.len() < pop_size {
            let pa = tournament(&scored, &mut rng);
            let pb = tournament(&scored, &mut rng);
            let mut child = if rng.gen_bool(params.crossover_rate) {
                crossover(&population[pa], &population[pb], &mut rng)
            } else {
                population[pa].clone()
            };
            mutate(ctx, &mut child, params.mutation_rate, &mut rng);
            next.push(child);
        }
        population = next;
    }

    let (accepted, schedule) = best.expect("at least one generation evaluated");
    SolveOutcome {
        schedule,
        accepted,
        budget_exhausted,
    }
}

fn stream(seed: u64, gen: u64, slot: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(gen.wrapping_mul(0x1_0000_0001).wrapping_add(slot));
    rng
}

fn tournament(scored: &[(usize, usize)], rng: &mut ChaCha8Rng) -> usize {
    let mut best: Option<(usize, usize)> = None;
    for _ in 0..3 {
        let pick = scored[rng.gen_range(0..scored.len())];
        if best.map_or(true, |(f, _)| pick.0 > f) {
            best = Some(pick);
        }
    }
    best.unwrap().1
}

fn gene_bounds(ctx: &Ctx, plan_idx: usize) -> (usize, Vec<(usize, usize, usize)>) {
    let plan = &ctx.plans[plan_idx];
    let routes = plan.routes.len().max(1);
    let n_p = ctx.traffic.apps[&plan.id].packets_per_msg() as usize;
    let pkts = plan
        .packets[..n_p]
        .iter()
        .map(|packet| {
            // Offset and extra grids are route-independent; the shift bound
            // varies per route, so use the widest and clamp at decode.
            let mut off = 1;
            let mut shift = 1;
            let mut extra = 1;
            for route in &plan.routes {
                let d = ctx.domains(plan, route, packet);
                off = off.max(d.offsets.len());
                shift = shift.max(d.shifts.len());
                extra = extra.max(d.extras.len());
            }
            (off, shift, extra)
        })
        .collect();
    (routes, pkts)
}

fn random_chromosome(ctx: &Ctx, rng: &mut ChaCha8Rng) -> Chromosome {
    (0..ctx.plans.len())
        .map(|i| {
            let (routes, pkts) = gene_bounds(ctx, i);
            Gene {
                accept: rng.gen_bool(0.8),
                route: rng.gen_range(0..routes),
                pkts: pkts
                    .iter()
                    .map(|&(o, s, e)| {
                        (
                            rng.gen_range(0..o),
                            rng.gen_range(0..s),
                            rng.gen_range(0..e),
                        )
                    })
                    .collect(),
            }
        })
        .collect()
}

fn encode_greedy(ctx: &Ctx) -> Chromosome {
    let mut schedule = ctx.reject_all();
    let mut state = PlacementState::new(ctx.graph);
    let mut genes = Vec::with_capacity(ctx.plans.len());
    for plan in &ctx.plans {
        let mut gene = Gene {
            accept: false,
            route: 0,
            pkts: vec![(0, 0, 0); ctx.traffic.apps[&plan.id].packets_per_msg() as usize],
        };
        for (ri, route) in plan.routes.iter().enumerate() {
            if let Some(placements) = first_fit_app(ctx, &mut state, plan, route) {
                gene.accept = true;
                gene.route = ri;
                // Placements come in lead order, one mirrored group per
                // lead packet; the group's first entry is the lead.
                let n_m = placements.len() / gene.pkts.len().max(1);
                for (pi, group) in placements.chunks(n_m.max(1)).enumerate() {
                    let p = &group[0];
                    let dom = ctx.domains(plan, route, &plan.packets[pi]);
                    gene.pkts[pi] = (
                        dom.offsets.iter().position(|&o| o == p.src_offset).unwrap_or(0),
                        dom.shifts.iter().position(|&s| s == p.shift).unwrap_or(0),
                        dom.extras.iter().position(|&e| e == p.extra).unwrap_or(0),
                    );
                }
                accept_app(&mut schedule, plan, route, &placements);
                break;
            }
        }
        genes.push(gene);
    }
    genes
}

fn crossover(a: &Chromosome, b: &Chromosome, rng: &mut ChaCha8Rng) -> Chromosome {
    a.iter()
        .zip(b)
        .map(|(ga, gb)| if rng.gen_bool(0.5) { ga.clone() } else { gb.clone() })
        .collect()
}

fn mutate(ctx: &Ctx, chrom: &mut Chromosome, rate: f64, rng: &mut ChaCha8Rng) {
    for (i, gene) in chrom.iter_mut().enumerate() {
        let (routes, pkts) = gene_bounds(ctx, i);
        if rng.gen_bool(rate) {
            gene.accept = !gene.accept;
        }
        if rng.gen_bool(rate) {
            gene.route = rng.gen_range(0..routes);
        }
        for (pi, slots) in gene.pkts.iter_mut().enumerate() {
            let (o, s, e) = pkts[pi];
            if rng.gen_bool(rate) {
                slots.0 = rng.gen_range(0..o);
            }
            if rng.gen_bool(rate) {
                slots.1 = rng.gen_range(0..s);
            }
            if rng.gen_bool(rate) {
                slots.2 = rng.gen_range(0..e);
            }
        }
    }
}

/// Decodes a chromosome into a schedule (no feasibility filtering), repairs
/// it by evicting the most-violating applications, and returns the surviving
/// accepted count with the repaired schedule.
fn evaluate(ctx: &Ctx, chrom: &Chromosome) -> (usize, Schedule) {
    let mut schedule = ctx.reject_all();
    for (gene, plan) in chrom.iter().zip(&ctx.plans) {
        if !gene.accept || plan.routes.is_empty() {
            continue;
        }
        let route = &plan.routes[gene.route % plan.routes.len()];
        schedule.admission.insert(plan.id.clone(), true);
        schedule.routes.insert(plan.id.clone(), route.clone());
        let app = &ctx.traffic.apps[&plan.id];
        let n_p = app.packets_per_msg() as usize;
        let n_m = app.messages_per_ct(&ctx.graph.time) as usize;
        let t_ct = ctx.graph.time.t_ct;
        for (j, &(oi, si, ei)) in gene.pkts.iter().enumerate() {
            let lead = &plan.packets[j];
            let dom = ctx.domains(plan, route, lead);
            let off = dom.offsets[oi % dom.offsets.len()];
            let shift = dom.shifts[si % dom.shifts.len()];
            let extra = dom.extras[ei % dom.extras.len()];
            for i in 0..n_m {
                let key = plan.packets[i * n_p + j].key.clone();
                let off_i = crate::model::time::floor_mod(off + i as i64 * app.period, t_ct);
                schedule.src_offsets.insert(key.clone(), off_i);
                schedule.cycle_shifts.insert(key.clone(), shift);
                schedule.extra_delays.insert(key, extra);
            }
        }
    }
    repair(ctx, &mut schedule);
    let accepted = schedule.accepted_count();
    (accepted, schedule)
}

/// Greedily evicts the application with the most violations until feasible.
fn repair(ctx: &Ctx, schedule: &mut Schedule) {
    loop {
        let (report, analysis) =
            validator::validate_with_analysis(ctx.graph, ctx.traffic, schedule);
        if report.is_feasible() {
            return;
        }
        let counts = report.per_app_counts(&analysis);
        let victim = counts
            .iter()
            .max_by(|a, b| a.1.cmp(b.1).then_with(|| b.0.cmp(a.0)))
            .map(|(id, _)| id.clone())
            .expect("violations imply an offending application");
        schedule.evict(&victim);
    }
}
