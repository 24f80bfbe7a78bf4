//! Print the vertex tables of the small polytopes and their row maxima.

use coherence_cert::bounds::{row_maxima, vertex_table, VertexCase};

fn main() {
    for case in VertexCase::ALL {
        println!("{case}");
        let records = vertex_table(case);
        for rec in &records {
            let coords: Vec<String> = rec.coords.iter().map(|(f, e)| format!("D{f} = {e}")).collect();
            println!(
                "  row {} on D0 in [{:.3}, {:.3}]: {}  max R_3 {:.4} at D0 = {:.4}",
                rec.row, rec.d0_range.0, rec.d0_range.1, coords.join(", "), rec.r3_max, rec.d0_at_max
            );
        }
        let maxima: Vec<String> = row_maxima(&records).iter().map(|m| format!("{m:.4}")).collect();
        println!("  row maxima: {}", maxima.join(" "));
    }
}
