//! Plan a 1.5B-character budget over three low-resource languages with
//! Unimax and compare against proportional sampling.
//!
//!     cargo run -p xlr-forge --example unimax_plan

use std::collections::BTreeMap;

use num_traits::ToPrimitive;
use xlr_forge::sampler::{
    proportional_allocate, unimax_allocate, Allocation, Availability, Rational,
};

fn show(label: &str, a: &Allocation) {
    print!("{label:<13}");
    for (key, entry) in a.entries() {
        let epochs = entry
            .epochs()
            .map(|e| e.to_f64().unwrap())
            .unwrap_or(f64::NAN);
        print!("  {key} {:>6.2}% x{epochs:.2}", 100.0 * a.proportion(key));
    }
    println!();
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let available: BTreeMap<String, Availability> = [
        ("liv", 2_600_000),
        ("vro", 14_000_000),
        ("kpv", 578_900_000),
    ]
    .into_iter()
    .map(|(k, n)| (k.to_string(), Availability::Count(n)))
    .collect();
    let budget = 1_500_000_000;

    show("proportional", &proportional_allocate(&available, budget)?);
    for n in [1, 2, 4, 8] {
        show(
            &format!("unimax N={n}"),
            &unimax_allocate(&available, budget, Rational::from_integer(n))?,
        );
    }

    let plan = unimax_allocate(&available, budget, Rational::from_integer(4))?;
    println!("{}", serde_json::to_string_pretty(&plan.report())?);
    Ok(())
}
