use nliso::geometry::{tessellate, geometric_identity_residuals, ShapeSpec};
fn main() {
    for res in [2u32, 3, 4, 5] {
        let b = tessellate(&ShapeSpec::Ball { dim: 3, center: [0.0;3], radius: 1.0, resolution: res }).unwrap();
        let r = geometric_identity_residuals(&b).unwrap();
        println!("res {res}: r1 rel {:.4} r2 rel {:.4}", r.r1/r.scale1, r.r2/r.scale2);
    }
}
