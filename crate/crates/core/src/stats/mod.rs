//! Fisher-information asymptotics, χ² functions, goodness-of-fit testing.

mod chi2;
mod fisher;
mod pearson;

pub use chi2::{kolmogorov_sf, ks_test, ChiSquare, KsResult};
pub use fisher::{
    asymptotic_mse, chart_mle, coarse_fisher, fisher_information, g_matrix, qmse_bound, trace_g_inv, ChartFit,
    FisherPair, MIN_CELL_PROBABILITY,
};
pub use pearson::{
    bootstrap_pearson, bootstrap_pearson_from_fit, kl_measurement, pearson_df, pearson_statistic, pearson_test,
    upper_quantile, BootstrapOptions, TestMethod, TestResult,
};
