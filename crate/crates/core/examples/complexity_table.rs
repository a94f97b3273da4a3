//! Size and inference cost of every detector network.

use rsma_mbdl::harness::complexity_table;

fn main() {
    println!("{:18} {:7} {:10} {:>12} {:>12}", "purpose", "target", "hidden", "params", "mults/symbol");
    for r in complexity_table() {
        let hidden: Vec<String> = r.hidden.iter().map(|h| h.to_string()).collect();
        let show = |base, slope| {
            if slope == 0 {
                format!("{base}")
            } else {
                format!("{base}+{slope}Mc")
            }
        };
        println!(
            "{:18} {:7} {:10} {:>12} {:>12}",
            format!("{:?}", r.purpose),
            r.modulation.to_string(),
            hidden.join("-"),
            show(r.params_base, r.params_slope),
            show(r.rmps_base, r.rmps_slope)
        );
    }
}
