//! Min-cost satisfying flow on a dense supply/demand bipartite network via
//! successive shortest paths with node potentials.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

// Residual masses at or below this are treated as exhausted.
const MASS_EPS: f64 = 1e-14;
// Flows at or below this do not open a residual back edge.
const FLOW_EPS: f64 = 1e-16;

/// Feasibility tolerance on row/column sums of returned flows.
pub const FEASIBILITY_TOL: f64 = 1e-9;

/// A complete bipartite supply/demand network with edge costs.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowNetwork {
    pub supply: Vec<f64>,
    pub demand: Vec<f64>,
    /// `cost[i][j]` is the weight of edge (s_i, t_j).
    pub cost: Vec<Vec<f64>>,
    /// Edges (s_i, t_j) joining copies of the same ground point.
    pub zero_edges: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowEntry {
    pub from: usize,
    pub to: usize,
    pub amount: f64,
    pub cost: f64,
}

/// A satisfying flow, listed sparsely, and its total cost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowResult {
    pub entries: Vec<FlowEntry>,
    pub cost: f64,
}

impl FlowResult {
    pub fn row_sums(&self, rows: usize) -> Vec<f64> {
        let mut s = vec![0.0; rows];
        for e in &self.entries {
            s[e.from] += e.amount;
        }
        s
    }

    pub fn col_sums(&self, cols: usize) -> Vec<f64> {
        let mut s = vec![0.0; cols];
        for e in &self.entries {
            s[e.to] += e.amount;
        }
        s
    }

    /// Mass carried on edges of strictly positive cost.
    pub fn moved_mass(&self) -> f64 {
        self.entries.iter().filter(|e| e.cost > 0.0).map(|e| e.amount).sum()
    }

    pub fn amount(&self, from: usize, to: usize) -> f64 {
        self.entries
            .iter()
            .filter(|e| e.from == from && e.to == to)
            .map(|e| e.amount)
            .sum()
    }
}

impl FlowNetwork {
    fn validate(&self) -> Result<()> {
        let (m, n) = (self.supply.len(), self.demand.len());
        if m == 0 || n == 0 {
            return Err(Error::EmptyInput);
        }
        if self.cost.len() != m || self.cost.iter().any(|r| r.len() != n) {
            return Err(Error::Param(format!("cost matrix must be {m}x{n}")));
        }
        if self.cost.iter().flatten().any(|c| !(c.is_finite() && *c >= 0.0)) {
            return Err(Error::Param("edge costs must be finite and non-negative".into()));
        }
        if self.supply.iter().chain(&self.demand).any(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(Error::Param("masses must be finite and non-negative".into()));
        }
        let (s, t): (f64, f64) = (self.supply.iter().sum(), self.demand.iter().sum());
        if (s - t).abs() > FEASIBILITY_TOL {
            return Err(Error::SolverFailure(format!("supply {s} does not match demand {t}")));
        }
        Ok(())
    }

    /// An optimal satisfying flow.
    pub fn solve(&self) -> Result<FlowResult> {
        self.validate()?;
        let flow = self.shortest_paths()?;
        Ok(self.collect(&flow))
    }

    /// An optimal flow in which every zero-cost edge carries
    /// `min(supply, demand)` of its endpoints.
    pub fn solve_saturated(&self) -> Result<FlowResult> {
        self.validate()?;
        let mut flow = self.shortest_paths()?;
        self.saturate_zero_edges(&mut flow);
        Ok(self.collect(&flow))
    }

    fn collect(&self, flow: &[Vec<f64>]) -> FlowResult {
        let mut entries = Vec::new();
        let mut cost = 0.0;
        for (i, row) in flow.iter().enumerate() {
            for (j, &amount) in row.iter().enumerate() {
                if amount > 0.0 {
                    let c = self.cost[i][j];
                    cost += amount * c;
                    entries.push(FlowEntry { from: i, to: j, amount, cost: c });
                }
            }
        }
        FlowResult { entries, cost }
    }

    fn shortest_paths(&self) -> Result<Vec<Vec<f64>>> {
        let (m, n) = (self.supply.len(), self.demand.len());
        let cost = &self.cost;
        let mut flow = vec![vec![0.0; n]; m];
        let mut rs = self.supply.clone();
        let mut rd = self.demand.clone();
        let mut pot_s = vec![0.0; m];
        let mut pot_t = vec![0.0; n];

        let mut dist_s = vec![0.0; m];
        let mut dist_t = vec![0.0; n];
        let mut done_s = vec![false; m];
        let mut done_t = vec![false; n];
        // pred_t[j] = source row of the forward edge into t_j.
        let mut pred_t = vec![usize::MAX; n];
        // pred_s[i] = column of the back edge into s_i, MAX for path starts.
        let mut pred_s = vec![usize::MAX; m];

        loop {
            if !rs.iter().any(|&x| x > MASS_EPS) || !rd.iter().any(|&x| x > MASS_EPS) {
                break;
            }
            for i in 0..m {
                dist_s[i] = if rs[i] > MASS_EPS { 0.0 } else { f64::INFINITY };
                done_s[i] = false;
                pred_s[i] = usize::MAX;
            }
            for j in 0..n {
                dist_t[j] = f64::INFINITY;
                done_t[j] = false;
                pred_t[j] = usize::MAX;
            }

            let target = loop {
                // Dense Dijkstra: pick the closest unsettled node.
                let mut best = f64::INFINITY;
                let mut pick: Option<(bool, usize)> = None;
                for i in 0..m {
                    if !done_s[i] && dist_s[i] < best {
                        best = dist_s[i];
                        pick = Some((true, i));
                    }
                }
                for j in 0..n {
                    if !done_t[j] && dist_t[j] < best {
                        best = dist_t[j];
                        pick = Some((false, j));
                    }
                }
                match pick {
                    None => {
                        return Err(Error::SolverFailure("no augmenting path to a demand node".into()))
                    }
                    Some((true, i)) => {
                        done_s[i] = true;
                        let base = dist_s[i] + pot_s[i];
                        for j in 0..n {
                            if done_t[j] {
                                continue;
                            }
                            let nd = (base + cost[i][j] - pot_t[j]).max(dist_s[i]);
                            if nd < dist_t[j] {
                                dist_t[j] = nd;
                                pred_t[j] = i;
                            }
                        }
                    }
                    Some((false, j)) => {
                        done_t[j] = true;
                        if rd[j] > MASS_EPS {
                            break j;
                        }
                        let base = dist_t[j] + pot_t[j];
                        for i in 0..m {
                            if done_s[i] || flow[i][j] <= FLOW_EPS {
                                continue;
                            }
                            let nd = (base - cost[i][j] - pot_s[i]).max(dist_t[j]);
                            if nd < dist_s[i] {
                                dist_s[i] = nd;
                                pred_s[i] = j;
                            }
                        }
                    }
                }
            };

            let reach = dist_t[target];
            for i in 0..m {
                pot_s[i] += dist_s[i].min(reach);
            }
            for j in 0..n {
                pot_t[j] += dist_t[j].min(reach);
            }

            // Walk back: t_target <- s_i (forward) <- t_j (back edge) <- ...
            let mut bottleneck = rd[target];
            let mut j = target;
            let start = loop {
                let i = pred_t[j];
                match pred_s[i] {
                    usize::MAX => break i,
                    jj => {
                        bottleneck = bottleneck.min(flow[i][jj]);
                        j = jj;
                    }
                }
            };
            bottleneck = bottleneck.min(rs[start]);

            let mut j = target;
            loop {
                let i = pred_t[j];
                flow[i][j] += bottleneck;
                match pred_s[i] {
                    usize::MAX => break,
                    jj => {
                        flow[i][jj] -= bottleneck;
                        if flow[i][jj] <= FLOW_EPS {
                            flow[i][jj] = 0.0;
                        }
                        j = jj;
                    }
                }
            }
            rs[start] -= bottleneck;
            rd[target] -= bottleneck;
        }

        let worst = rs.iter().chain(&rd).fold(0.0f64, |a, &x| a.max(x.abs()));
        if worst > FEASIBILITY_TOL {
            return Err(Error::SolverFailure(format!("residual mass {worst} left unrouted")));
        }
        Ok(flow)
    }

    // Swap argument: if (s_x, t_x) carries less than min(p(x), q(x)), some
    // s_x -> t_y and s_z -> t_x carry mass; rerouting alpha of it through
    // (s_x, t_x) and (s_z, t_y) never raises cost under the triangle
    // inequality. Each swap zeroes an edge, so this terminates.
    fn saturate_zero_edges(&self, flow: &mut [Vec<f64>]) {
        let n = self.demand.len();
        for &(x, xt) in &self.zero_edges {
            let target = self.supply[x].min(self.demand[xt]);
            while flow[x][xt] < target {
                let y = (0..n).filter(|&y| y != xt).find(|&y| flow[x][y] > 0.0);
                let z = (0..flow.len()).filter(|&z| z != x).find(|&z| flow[z][xt] > 0.0);
                let (Some(y), Some(z)) = (y, z) else { break };
                let alpha = flow[x][y].min(flow[z][xt]).min(target - flow[x][xt]);
                flow[x][y] -= alpha;
                flow[z][xt] -= alpha;
                flow[x][xt] += alpha;
                flow[z][y] += alpha;
                if flow[x][y] <= FLOW_EPS {
                    flow[x][y] = 0.0;
                }
                if flow[z][xt] <= FLOW_EPS {
                    flow[z][xt] = 0.0;
                }
                if alpha <= FLOW_EPS {
                    break;
                }
            }
        }
    }
}
