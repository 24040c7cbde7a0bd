mod common;

use common::oracle::check_instance;

#[test]
fn updates_match_dense_oracle() {
    for seed in 0..50 {
        for mask_kind in 0..3 {
            for warmup in [0, 3] {
                check_instance(seed, mask_kind, warmup);
            }
        }
    }
}
