//! Exhaustive admission maximization: depth-first enumeration over apps in
//! placement order, each either rejected or placed with every feasible
//! (route, offset, shift, extra) combination, with a branch-and-bound cut on
//! the remaining application count.

use crate::error::SolveError;
use crate::schedule::Schedule;

use super::{accept_app, base_delay, Ctx, Placement, PlacementState, SolveOutcome};

pub(crate) fn solve(ctx: &Ctx) -> Result<SolveOutcome, SolveError> {
    let mut estimate: u128 = 1;
    for plan in &ctx.plans {
        let n_p = ctx.traffic.apps[&plan.id].packets_per_msg() as usize;
        let mut per_app: u128 = 1;
        for route in &plan.routes {
            let mut combos: u128 = 1;
            // Message instances mirror the lead assignment, so only the
            // first message's packets are free variables.
            for packet in &plan.packets[..n_p] {
                let d = ctx.domains(plan, route, packet);
                combos = combos
                    .saturating_mul((d.offsets.len() * d.shifts.len() * d.extras.len()) as u128);
            }
            per_app = per_app.saturating_add(combos);
        }
        estimate = estimate.saturating_mul(per_app);
    }
    let limit = ctx.config.exhaustive_limit as u128;
    if estimate > limit {
        return Err(SolveError::SearchSpaceTooLarge { estimate, limit });
    }

    let mut search = Search {
        ctx,
        state: PlacementState::new(ctx.graph),
        working: ctx.reject_all(),
        best: ctx.reject_all(),
        best_count: 0,
        budget_exhausted: false,
    };
    search.dfs(0, 0);
    Ok(SolveOutcome {
        accepted: search.best_count,
        schedule: search.best,
        budget_exhausted: search.budget_exhausted,
    })
}

struct Search<'c, 'a> {
    ctx: &'c Ctx<'a>,
    state: PlacementState,
    working: Schedule,
    best: Schedule,
    best_count: usize,
    budget_exhausted: bool,
}

impl<'c, 'a> Search<'c, 'a> {
    fn dfs(&mut self, idx: usize, accepted: usize) {
        if self.budget_exhausted {
            return;
        }
        if self.ctx.budget_exhausted() {
            self.budget_exhausted = true;
            return;
        }
        let ctx = self.ctx;
        if idx == ctx.plans.len() {
            if accepted > self.best_count {
                self.best_count = accepted;
                self.best = self.working.clone();
            }
            return;
        }
        // Even accepting every remaining app cannot beat the incumbent.
        if accepted + (ctx.plans.len() - idx) <= self.best_count {
            return;
        }
        for route_idx in 0..ctx.plans[idx].routes.len() {
            let mut placed = Vec::new();
            self.place(idx, accepted, route_idx, 0, &mut placed);
        }
        self.dfs(idx + 1, accepted);
    }

    fn place(
        &mut self,
        idx: usize,
        accepted: usize,
        route_idx: usize,
        lead_j: usize,
        placed: &mut Vec<Placement>,
    ) {
        if self.budget_exhausted {
            return;
        }
        let ctx = self.ctx;
        let plan = &ctx.plans[idx];
        let route = &plan.routes[route_idx];
        let app = &ctx.traffic.apps[&plan.id];
        let n_p = app.packets_per_msg() as usize;
        if lead_j == n_p {
            accept_app(&mut self.working, plan, route, placed);
            self.dfs(idx + 1, accepted + 1);
            self.working.evict(&plan.id);
            return;
        }
        let lead = &plan.packets[lead_j];
        let dom = ctx.domains(plan, route, lead);
        for &off in &dom.offsets {
            for &shift in &dom.shifts {
                let Some(base) = base_delay(ctx, plan, route, lead, off, shift) else {
                    continue;
                };
                if base > app.e2e {
                    break;
                }
                for &extra in &dom.extras {
                    if base + extra > app.e2e {
                        break;
                    }
                    if let Some(group) = super::try_mirrored(
                        ctx,
                        &mut self.state,
                        plan,
                        route,
                        lead_j,
                        off,
                        shift,
                        extra,
                    ) {
                        let n = group.len();
                        placed.extend(group);
                        self.place(idx, accepted, route_idx, lead_j + 1, placed);
                        for _ in 0..n {
                            let p = placed.pop().unwrap();
                            self.state.remove(&p);
                        }
                    }
                }
            }
        }
    }
}
