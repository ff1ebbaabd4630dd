//! Named parameter sets. Energies in units of `J = 1`.

use crate::model::{BathSpec, LatticeConfig, LossTopology, Model, SpinBath};

pub const NAMES: [&str; 7] = ["fig1b", "fig1c", "fig2a", "fig2b", "fig2c", "fig3", "fig4"];

const fn bath(gain: f64, loss: f64, topology: LossTopology) -> SpinBath {
    SpinBath { gain, loss, topology }
}

const fn model(u: f64, up: SpinBath, down: SpinBath) -> Model {
    Model {
        lattice: LatticeConfig { sites: 128, hopping: 1.0, interaction: u },
        bath: BathSpec { up, down },
    }
}

const CLOSED: SpinBath = SpinBath::closed();
const NR: LossTopology = LossTopology::NonReciprocal;
const UNI: LossTopology = LossTopology::Uniform;

pub fn preset(name: &str) -> Option<Model> {
    let m = match name {
        "fig1b" => model(0.0, CLOSED, bath(1.5, 0.5, NR)),
        "fig1c" | "fig3" => model(4.0, CLOSED, bath(1.5, 0.5, NR)),
        "fig2a" => model(4.0, CLOSED, bath(0.2, 0.2, UNI)),
        "fig2b" => model(4.0, bath(0.0, 0.4, UNI), bath(0.5, 0.5, NR)),
        "fig2c" => model(4.0, bath(0.0, 0.4, UNI), bath(1.5, 0.5, NR)),
        "fig4" => model(2.0, CLOSED, bath(0.2, 2.0, NR)),
        _ => return None,
    };
    Some(m)
}
