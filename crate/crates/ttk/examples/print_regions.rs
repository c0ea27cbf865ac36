fn main() {
    let t = ttk::samples::pinwheel();
    for (i, r) in t.complementary_regions().unwrap().iter().enumerate() {
        let segs: Vec<String> = r.segments.iter().map(|(b, s)| format!("{b}{s}")).collect();
        println!("region {}: cusps {} segs [{}]", i, r.cusps, segs.join(" "));
    }
}
