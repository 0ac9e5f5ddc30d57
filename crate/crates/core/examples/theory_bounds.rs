use roma::theory::{snr_from_db, TheoryParams, TheoryReport};

fn main() -> roma::Result<()> {
    let cases = [
        TheoryParams { n: 100, r: 20, num_points: 1000, n_inliers: 100, n_structured: 0, snr: None },
        TheoryParams { n: 100, r: 10, num_points: 1000, n_inliers: 200, n_structured: 0, snr: Some(snr_from_db(20.0)) },
        TheoryParams { n: 300, r: 6, num_points: 400, n_inliers: 100, n_structured: 0, snr: Some(100.0) },
        TheoryParams { n: 200, r: 10, num_points: 1000, n_inliers: 300, n_structured: 700, snr: None },
    ];
    for params in cases {
        let t = TheoryReport::evaluate(params)?;
        println!(
            "n={} r={} N={} N_I={} N_Os={}",
            params.n, params.r, params.num_points, params.n_inliers, params.n_structured
        );
        println!("  p_I                      {:.4}", t.p_inlier);
        println!("  OIP alpha                {:.4}", t.oip_alpha);
        println!(
            "  ERP impossible below     {:.4}{}",
            t.erp_impossibility_alpha.raw,
            if t.erp_impossibility_alpha.in_unit_interval { "" } else { " (vacuous)" }
        );
        println!("  P(inlier set non-empty) >= {:.4}", t.nonempty_prob_lb.clamped());
        println!("  sizable share for r <=  {:.2}", t.max_rank_sizable);
        if let Some(r) = t.max_rank_sizable_noisy {
            println!("    with noise            {:.2}", r);
        }
        println!("  second stage exact with prob >= {:.6}", t.structured_exact_prob);
    }
    Ok(())
}
