//! Router plus one ridge model per route.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::mlp::{mlp_fit, MlpClassifier, MlpConfig};
use super::ridge::{default_lambda_grid, ridge_fit_tuned, CvConfig, RidgeModel};
use super::RegressionError;
use crate::clustering::{fit_single_feature, kmeans_assign, kmeans_fit, CriticalPoint, KMeansConfig, KMeansModel, LogisticConfig, StandardScaler};
use crate::dataset::FeatureTable;
use crate::features::{FeatureSchema, SCHEMA_VERSION};
use crate::matrix::Matrix;
use crate::par::{self, Execution};
use crate::signal::Source;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "mode")]
pub enum Method {
    Baseline,
    Classification,
    Kmeans,
    KmeansSingleFeature { feature: String },
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Baseline => f.write_str("baseline"),
            Method::Classification => f.write_str("classification"),
            Method::Kmeans => f.write_str("kmeans"),
            Method::KmeansSingleFeature { feature } => write!(f, "kmeans-single-feature:{feature}"),
        }
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "baseline" => Ok(Method::Baseline),
            "classification" => Ok(Method::Classification),
            "kmeans" => Ok(Method::Kmeans),
            other => match other.strip_prefix("kmeans-single-feature:") {
                Some(f) if !f.is_empty() => Ok(Method::KmeansSingleFeature { feature: f.to_string() }),
                _ => Err(format!("unknown method `{other}`")),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub lambda_grid: Vec<f64>,
    pub cv: CvConfig,
    /// Routes with fewer training rows use the all-data model.
    pub min_route_size: usize,
    /// When false a small route is an error instead of a fallback.
    pub small_route_fallback: bool,
    pub kmeans: KMeansConfig,
    /// Feature indices the K-means router clusters on.
    pub kmeans_subset: Vec<usize>,
    /// Runs behind the single-feature mode labels.
    pub repeats: usize,
    pub logistic: LogisticConfig,
    pub mlp: MlpConfig,
    /// Classification on a single-source training set yields one route with
    /// a warning instead of an error.
    pub allow_degenerate_classification: bool,
    pub execution: Execution,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lambda_grid: default_lambda_grid(),
            cv: CvConfig::default(),
            min_route_size: 10,
            small_route_fallback: true,
            kmeans: KMeansConfig::default(),
            kmeans_subset: FeatureSchema::v1().temporal_base_indices(),
            repeats: 100,
            logistic: LogisticConfig::default(),
            mlp: MlpConfig::default(),
            allow_degenerate_classification: false,
            execution: Execution::Parallel,
        }
    }
}

impl TrainConfig {
    /// Sets every seed the training path consumes.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.cv.seed = seed;
        self.kmeans.seed = seed;
        self.mlp.seed = seed;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Router {
    None,
    Mlp { classifier: MlpClassifier, classes: Vec<Source> },
    Kmeans { scaler: StandardScaler, model: KMeansModel },
    Critical { feature_index: usize, point: CriticalPoint },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Route {
    pub name: String,
    pub model: RidgeModel,
    pub n_train: usize,
    /// The route had too few rows and carries the all-data model.
    pub fallback: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubtypePipeline {
    pub schema_version: String,
    pub schema_fingerprint: String,
    pub method: Method,
    pub router: Router,
    pub routes: Vec<Route>,
    pub warnings: Vec<String>,
}

impl SubtypePipeline {
    /// 0-based route of one full-width feature row.
    pub fn route_of(&self, row: &[f64]) -> usize {
        match &self.router {
            Router::None => 0,
            Router::Mlp { classifier, .. } => classifier.predict_row(row),
            Router::Kmeans { scaler, model } => crate::clustering::kmeans::assign_row(model, &scaler.transform_row(row)) - 1,
            Router::Critical { feature_index, point } => point.side(row[*feature_index]) - 1,
        }
    }

    fn check_width(&self, x: &Matrix) -> Result<(), RegressionError> {
        let want = FeatureSchema::v1().len();
        if self.schema_version != SCHEMA_VERSION || x.cols() != want {
            return Err(RegressionError::SchemaMismatch(format!(
                "pipeline schema {} expects {want} columns, got {}",
                self.schema_version,
                x.cols()
            )));
        }
        Ok(())
    }

    pub fn routes_for(&self, x: &Matrix) -> Result<Vec<usize>, RegressionError> {
        self.check_width(x)?;
        Ok(x.iter_rows().map(|r| self.route_of(r)).collect())
    }

    /// Unclipped route-model outputs.
    pub fn predict_raw(&self, x: &Matrix) -> Result<Vec<f64>, RegressionError> {
        self.check_width(x)?;
        Ok(x.iter_rows().map(|r| self.routes[self.route_of(r)].model.predict_row(r)).collect())
    }

    /// CSDM estimates clipped to [0, 1].
    pub fn predict(&self, x: &Matrix) -> Result<Vec<f64>, RegressionError> {
        Ok(self.predict_raw(x)?.into_iter().map(|v| v.clamp(0.0, 1.0)).collect())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("pipeline serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }
}

fn fit_routes(
    x: &Matrix,
    y: &[f64],
    groups: &[(String, Vec<usize>)],
    cfg: &TrainConfig,
    warnings: &mut Vec<String>,
) -> Result<Vec<Route>, RegressionError> {
    let small: Vec<&(String, Vec<usize>)> = groups.iter().filter(|(_, idx)| idx.len() < cfg.min_route_size).collect();
    if let Some((name, idx)) = small.first() {
        if !cfg.small_route_fallback {
            return Err(RegressionError::EmptyCluster { route: name.clone(), got: idx.len(), needed: cfg.min_route_size });
        }
    }
    let all: Vec<usize> = (0..x.rows()).collect();
    let fit = |idx: &[usize]| {
        let yr: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
        ridge_fit_tuned(&x.select_rows(idx), &yr, &cfg.lambda_grid, &cfg.cv, cfg.execution)
    };
    let fallback = if small.is_empty() { None } else { Some(fit(&all)?) };
    let models = par::try_map(cfg.execution, groups, |(_, idx)| {
        if idx.len() < cfg.min_route_size {
            Ok(None)
        } else {
            fit(idx).map(Some)
        }
    })?;
    let mut routes = Vec::with_capacity(groups.len());
    for ((name, idx), m) in groups.iter().zip(models) {
        let is_fallback = m.is_none();
        if is_fallback {
            let msg = format!("route {name} has {} training rows (< {}); using the all-data model", idx.len(), cfg.min_route_size);
            log::warn!("{msg}");
            warnings.push(msg);
        }
        routes.push(Route {
            name: name.clone(),
            model: m.or_else(|| fallback.clone()).expect("fallback model trained"),
            n_train: idx.len(),
            fallback: is_fallback,
        });
    }
    Ok(routes)
}

fn group_by(labels: &[usize], n_routes: usize, names: &[String]) -> Vec<(String, Vec<usize>)> {
    let mut groups: Vec<(String, Vec<usize>)> = names.iter().map(|n| (n.clone(), Vec::new())).collect();
    debug_assert_eq!(groups.len(), n_routes);
    for (i, &l) in labels.iter().enumerate() {
        groups[l].1.push(i);
    }
    groups
}

/// Trains the router and every route's ridge model (λ tuned per route).
pub fn train_pipeline(train: &FeatureTable, method: &Method, cfg: &TrainConfig) -> Result<SubtypePipeline, RegressionError> {
    let schema = FeatureSchema::v1();
    if train.x.cols() != schema.len() {
        return Err(RegressionError::SchemaMismatch(format!("expected {} feature columns, got {}", schema.len(), train.x.cols())));
    }
    let y: Vec<f64> = train
        .csdm
        .iter()
        .zip(&train.ids)
        .map(|(c, id)| c.ok_or_else(|| RegressionError::Unlabeled(id.clone())))
        .collect::<Result<_, _>>()?;
    let x = &train.x;
    let mut warnings = Vec::new();

    let (router, routes) = match method {
        Method::Baseline => {
            let groups = vec![("all".to_string(), (0..x.rows()).collect())];
            (Router::None, fit_routes(x, &y, &groups, cfg, &mut warnings)?)
        }
        Method::Classification => {
            let mut classes = train.distinct_sources();
            classes.sort();
            if classes.len() < 2 {
                if !cfg.allow_degenerate_classification {
                    return Err(RegressionError::TooFewClasses(classes.len()));
                }
                let msg = "classification with a single training source; pipeline has one route".to_string();
                log::warn!("{msg}");
                warnings.push(msg);
                let groups = vec![(classes.first().map_or("all".into(), |c| c.to_string()), (0..x.rows()).collect())];
                (Router::None, fit_routes(x, &y, &groups, cfg, &mut warnings)?)
            } else {
                let labels: Vec<usize> = train.sources.iter().map(|s| classes.iter().position(|c| c == s).unwrap()).collect();
                let classifier = mlp_fit(x, &schema.temporal_spectral_indices(), &labels, &cfg.mlp)?;
                let names: Vec<String> = classes.iter().map(|c| c.to_string()).collect();
                let routes = fit_routes(x, &y, &group_by(&labels, classes.len(), &names), cfg, &mut warnings)?;
                (Router::Mlp { classifier, classes }, routes)
            }
        }
        Method::Kmeans => {
            let names: Vec<String> = cfg.kmeans_subset.iter().map(|&i| schema.features[i].name.clone()).collect();
            let scaler = StandardScaler::fit(x, &cfg.kmeans_subset, &names)?;
            let kcfg = KMeansConfig { execution: cfg.execution, ..cfg.kmeans };
            let fit = kmeans_fit(&scaler.transform(x), &kcfg)?;
            let labels: Vec<usize> = fit.labels.iter().map(|l| l - 1).collect();
            let route_names: Vec<String> = (1..=kcfg.k).map(|k| format!("cluster-{k}")).collect();
            let routes = fit_routes(x, &y, &group_by(&labels, kcfg.k, &route_names), cfg, &mut warnings)?;
            (Router::Kmeans { scaler, model: fit.model }, routes)
        }
        Method::KmeansSingleFeature { feature } => {
            let fi = schema.index_of(feature).ok_or_else(|| RegressionError::UnknownFeature(feature.clone()))?;
            let column: Vec<f64> = x.column(fi).collect();
            let kcfg = KMeansConfig { execution: cfg.execution, ..cfg.kmeans };
            let sf = fit_single_feature(feature, &column, &kcfg, cfg.repeats, &cfg.logistic)?;
            let labels: Vec<usize> = column.iter().map(|&v| sf.critical.side(v) - 1).collect();
            let route_names = vec!["below".to_string(), "above".to_string()];
            let routes = fit_routes(x, &y, &group_by(&labels, 2, &route_names), cfg, &mut warnings)?;
            (Router::Critical { feature_index: fi, point: sf.critical }, routes)
        }
    };
    Ok(SubtypePipeline {
        schema_version: schema.schema_version.clone(),
        schema_fingerprint: schema.fingerprint(),
        method: method.clone(),
        router,
        routes,
        warnings,
    })
}

pub fn route_counts(routes: &[usize], n_routes: usize) -> Vec<usize> {
    let mut c = vec![0; n_routes];
    for &r in routes {
        c[r] += 1;
    }
    c
}

/// Labels the training rows received from the fitted K-means router.
pub fn training_routes(pipeline: &SubtypePipeline, x: &Matrix) -> Result<Vec<usize>, RegressionError> {
    match &pipeline.router {
        Router::Kmeans { scaler, model } => Ok(kmeans_assign(model, &scaler.transform(x))?.into_iter().map(|l| l - 1).collect()),
        _ => pipeline.routes_for(x),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Two regimes split on feature 11 with different linear maps.
    fn toy_table(n: usize, seed: u64) -> FeatureTable {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = FeatureSchema::v1().len();
        let mut data = Vec::with_capacity(n * p);
        let mut csdm = Vec::new();
        let mut sources = Vec::new();
        for i in 0..n {
            let regime2 = i % 2 == 1;
            let mut row: Vec<f64> = (0..p).map(|_| rng.random::<f64>()).collect();
            for v in row.iter_mut().take(16) {
                *v += if regime2 { 5.0 } else { 0.0 };
            }
            let y = if regime2 { 0.6 - 0.3 * (row[0] - 5.0) } else { 0.1 + 0.4 * row[1] };
            csdm.push(Some(y));
            data.extend(row);
            sources.push(if i % 4 < 2 { Source::Hm } else { Source::Cf });
        }
        FeatureTable { ids: (0..n).map(|i| format!("i{i}")).collect(), sources, csdm, x: Matrix::from_vec(n, p, data) }
    }

    fn quick() -> TrainConfig {
        TrainConfig { repeats: 10, mlp: MlpConfig { max_epochs: 20, ..Default::default() }, ..Default::default() }
    }

    #[test]
    fn baseline_has_one_route() {
        let t = toy_table(60, 1);
        let p = train_pipeline(&t, &Method::Baseline, &quick()).unwrap();
        assert_eq!(p.router, Router::None);
        assert_eq!(p.routes.len(), 1);
        assert!(p.predict(&t.x).unwrap().iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn kmeans_routes_match_training_clusters() {
        let t = toy_table(80, 2);
        let p = train_pipeline(&t, &Method::Kmeans, &quick()).unwrap();
        assert_eq!(p.routes.len(), 2);
        let routes = p.routes_for(&t.x).unwrap();
        assert_eq!(routes, training_routes(&p, &t.x).unwrap());
        for (i, r) in routes.iter().enumerate() {
            assert_eq!(*r, i % 2);
        }
        let counts = route_counts(&routes, 2);
        assert_eq!(counts.iter().sum::<usize>(), 80);
        let a = &p.routes[0].model.coefficients;
        let b = &p.routes[1].model.coefficients;
        let cos = a.iter().zip(b).map(|(u, v)| u * v).sum::<f64>()
            / (a.iter().map(|u| u * u).sum::<f64>().sqrt() * b.iter().map(|v| v * v).sum::<f64>().sqrt());
        assert!(cos < 0.99, "cosine {cos}");
    }

    #[test]
    fn single_feature_routes_by_side() {
        let t = toy_table(80, 3);
        let name = FeatureSchema::v1().features[11].name.clone();
        let p = train_pipeline(&t, &Method::KmeansSingleFeature { feature: name }, &quick()).unwrap();
        let Router::Critical { point, .. } = &p.router else { panic!() };
        assert_eq!(point.purity, 1.0);
        let mut row = t.x.row(0).to_vec();
        row[11] = point.c;
        assert_eq!(p.route_of(&row), 0);
    }

    #[test]
    fn clipping_and_schema_check() {
        let t = toy_table(40, 4);
        let p = train_pipeline(&t, &Method::Baseline, &quick()).unwrap();
        let raw = p.predict_raw(&t.x).unwrap();
        let clipped = p.predict(&t.x).unwrap();
        for (r, c) in raw.iter().zip(&clipped) {
            assert_eq!(*c, r.clamp(0.0, 1.0));
        }
        assert!(matches!(p.predict(&Matrix::zeros(1, 5)), Err(RegressionError::SchemaMismatch(_))));
    }

    #[test]
    fn degenerate_classification() {
        let mut t = toy_table(40, 5);
        t.sources = vec![Source::Hm; 40];
        assert!(matches!(train_pipeline(&t, &Method::Classification, &quick()), Err(RegressionError::TooFewClasses(1))));
        let cfg = TrainConfig { allow_degenerate_classification: true, ..quick() };
        let p = train_pipeline(&t, &Method::Classification, &cfg).unwrap();
        assert_eq!(p.routes.len(), 1);
        assert_eq!(p.warnings.len(), 1);
    }

    #[test]
    fn small_routes_fall_back() {
        let t = toy_table(40, 6);
        let cfg = TrainConfig { min_route_size: 25, ..quick() };
        let p = train_pipeline(&t, &Method::Kmeans, &cfg).unwrap();
        assert!(p.routes.iter().all(|r| r.fallback));
        assert_eq!(p.routes[0].model, p.routes[1].model);
        let strict = TrainConfig { small_route_fallback: false, ..cfg };
        assert!(matches!(train_pipeline(&t, &Method::Kmeans, &strict), Err(RegressionError::EmptyCluster { .. })));
    }

    #[test]
    fn json_round_trip_and_determinism() {
        let t = toy_table(60, 7);
        let cfg = quick();
        let p = train_pipeline(&t, &Method::Classification, &cfg).unwrap();
        let s = p.to_json();
        let back = SubtypePipeline::from_json(&s).unwrap();
        assert_eq!(back, p);
        let a: Vec<u64> = p.predict(&t.x).unwrap().iter().map(|v| v.to_bits()).collect();
        let b: Vec<u64> = back.predict(&t.x).unwrap().iter().map(|v| v.to_bits()).collect();
        assert_eq!(a, b);
        assert_eq!(train_pipeline(&t, &Method::Classification, &cfg).unwrap().to_json(), s);
    }

    #[test]
    fn method_names_parse() {
        for m in [Method::Baseline, Method::Classification, Method::Kmeans, Method::KmeansSingleFeature { feature: "x".into() }] {
            assert_eq!(m.to_string().parse::<Method>().unwrap(), m);
        }
        assert!("nope".parse::<Method>().is_err());
    }
}
