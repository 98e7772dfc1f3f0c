//! Every example under `examples/` must run to completion.

macro_rules! example {
    ($test:ident, $module:ident, $file:literal) => {
        #[allow(dead_code)]
        mod $module {
            include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/", $file));
        }

        #[test]
        fn $test() {
            $module::run_example().expect(concat!($file, " should run"));
        }
    };
}

example!(haar_sampling_runs, haar_sampling, "haar_sampling.rs");
example!(spectrum_bounds_runs, spectrum_bounds, "spectrum_bounds.rs");
example!(lower_bound_instances_runs, lower_bound_instances, "lower_bound_instances.rs");
example!(basic_certify_runs, basic_certify, "basic_certify.rs");
example!(full_certify_runs, full_certify, "full_certify.rs");
example!(weingarten_moments_runs, weingarten_moments, "weingarten_moments.rs");
example!(corner_divergence_runs, corner_divergence, "corner_divergence.rs");
example!(sweep_scaling_runs, sweep_scaling, "sweep_scaling.rs");
example!(calibrate_constants_runs, calibrate_constants, "calibrate_constants.rs");
