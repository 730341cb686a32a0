fn main() {
    for sigma in [0.25, 0.5, 1.0, 2.0] {
        let rows = privgame::suite::scan_family(
            privgame::suite::Family::Cournot, &[10, 20], sigma, 0.9, None, 2).unwrap();
        println!("sigma={sigma}: ratio = {}", rows[0].eps_plus_gamma / rows[1].eps_plus_gamma);
    }
}
