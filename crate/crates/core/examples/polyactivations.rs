//! The polyactivation registry: order, Lipschitz constants in each norm and a
//! numerical saturation check.

use lipcert::activations::Activation;
use lipcert::linalg::Norm;

fn main() {
    println!("{:<10} {:>5} {:>9} {:>9} {:>9}  saturated (defect)", "id", "order", "lip p=1", "lip p=2", "lip p=∞");
    for a in Activation::ALL {
        let lip: Vec<String> = Norm::ALL.iter().map(|&p| format!("{:>9.4}", a.lipschitz_constant(p))).collect();
        let sat: Vec<String> = Norm::ALL
            .iter()
            .map(|&p| format!("p={p}:{}({:.1e})", if a.is_saturated(p) { "y" } else { "n" }, a.check_saturation(p, 10_000)))
            .collect();
        println!("{:<10} {:>5} {}  {}", a.id(), a.order(), lip.join(" "), sat.join(" "));
    }
    let x = [-1.5, 0.0, 2.0];
    println!("\nsincos({x:?}) = {:?}", Activation::SinCos.apply(&x));
}
