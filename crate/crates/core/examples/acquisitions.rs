//! Every max-search policy scoring the same fitted surrogate.

use gpdc::gp::{Dataset, GPModel, Grid};
use gpdc::kernels::{Domain, KernelSpec, ObservationOperator};
use gpdc::policies::{acq_ei, acq_pi, acq_ucb, max_search_step, AcquisitionState, MaxPolicy, MaxPolicyKind};
use gpdc::problems::gen_random_function;

fn main() -> gpdc::Result<()> {
    let f = gen_random_function(4)?;
    let grid = Grid::unit_line(200)?;
    let mut data = Dataset::new(Domain::unit_interval());
    for x in [0.1, 0.35, 0.6, 0.9] {
        data.push(ObservationOperator::point(vec![x]), f.eval(x))?;
    }
    let model = GPModel::new(KernelSpec::matern52(0.1, 1.0)?, 1e-4)?;
    println!("true argmax {:.3}", f.max().0);
    for kind in MaxPolicyKind::ALL {
        let mut state = AcquisitionState::new(9);
        for (_, y) in data.records() {
            state.observe(*y);
        }
        let choice = max_search_step(&model, &data, &MaxPolicy::new(kind), &grid, &mut state)?;
        println!("{:>10} -> x = {:.3}", kind.name(), grid.point(choice.index)[0]);
    }

    println!("\nclosed forms at mu=0.2, sigma=0.5, incumbent 0.4");
    println!("PI  {:.5}", acq_pi(0.2, 0.5, 0.4, 1e-3));
    println!("EI  {:.5}", acq_ei(0.2, 0.5, 0.4));
    println!("UCB {:.5} (t=10, d=1)", acq_ucb(0.2, 0.5, 10, 1, 1.0, 0.05));
    Ok(())
}
