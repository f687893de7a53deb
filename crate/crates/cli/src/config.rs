//! Job configuration: a single JSON document validated up front.
//!
//! Numeric fields accept either JSON numbers or small constant expressions
//! over `pi` (`"pi"`, `"-4*pi^2"`, `"pi/2"`), parsed by a tiny grammar:
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := ('+' | '-')* atom ('^' factor)?
//! atom   := number | 'pi' | '(' expr ')'
//! ```

use num_complex::Complex64 as C64;
use serde::Deserialize;

use sobspec_core::spectra::DomainVariant;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("config: {0}")]
    Parse(String),
    #[error("config: field {field}: {message}")]
    Invalid { field: String, message: String },
}

fn invalid(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.into(),
        message: message.into(),
    }
}

/// A number or a constant expression string.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum Expr {
    Number(f64),
    Formula(String),
}

impl Expr {
    pub fn resolve(&self, field: &str) -> Result<f64, ConfigError> {
        match self {
            Expr::Number(v) => Ok(*v),
            Expr::Formula(s) => {
                parse_expression(s).map_err(|e| invalid(field, format!("{e} in {s:?}")))
            }
        }
    }
}

/// Recursive-descent evaluation of the constant grammar above.
pub fn parse_expression(input: &str) -> Result<f64, String> {
    let tokens = tokenize(input)?;
    let mut pos = 0;
    let value = parse_sum(&tokens, &mut pos)?;
    if pos != tokens.len() {
        return Err(format!("unexpected trailing token {:?}", tokens[pos]));
    }
    Ok(value)
}

#[derive(Clone, Debug, PartialEq)]
enum Token {
    Number(f64),
    Pi,
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    Open,
    Close,
}

fn tokenize(input: &str) -> Result<Vec<Token>, String> {
    let mut out = Vec::new();
    let bytes = input.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' => i += 1,
            '+' => {
                out.push(Token::Plus);
                i += 1;
            }
            '-' => {
                out.push(Token::Minus);
                i += 1;
            }
            '*' => {
                out.push(Token::Star);
                i += 1;
            }
            '/' => {
                out.push(Token::Slash);
                i += 1;
            }
            '^' => {
                out.push(Token::Caret);
                i += 1;
            }
            '(' => {
                out.push(Token::Open);
                i += 1;
            }
            ')' => {
                out.push(Token::Close);
                i += 1;
            }
            'p' | 'P' => {
                if input[i..].len() >= 2 && input[i..i + 2].eq_ignore_ascii_case("pi") {
                    out.push(Token::Pi);
                    i += 2;
                } else {
                    return Err(format!("unknown identifier at byte {i}"));
                }
            }
            '0'..='9' | '.' => {
                let start = i;
                while i < bytes.len() {
                    let d = bytes[i] as char;
                    if d.is_ascii_digit() || d == '.' {
                        i += 1;
                    } else if (d == 'e' || d == 'E')
                        && i + 1 < bytes.len()
                        && ((bytes[i + 1] as char).is_ascii_digit()
                            || bytes[i + 1] == b'+'
                            || bytes[i + 1] == b'-')
                    {
                        i += 2;
                    } else {
                        break;
                    }
                }
                let num: f64 = input[start..i]
                    .parse()
                    .map_err(|_| format!("bad number {:?}", &input[start..i]))?;
                out.push(Token::Number(num));
            }
            other => return Err(format!("unexpected character {other:?}")),
        }
    }
    if out.is_empty() {
        return Err("empty expression".into());
    }
    Ok(out)
}

fn parse_sum(tokens: &[Token], pos: &mut usize) -> Result<f64, String> {
    let mut acc = parse_product(tokens, pos)?;
    while *pos < tokens.len() {
        match tokens[*pos] {
            Token::Plus => {
                *pos += 1;
                acc += parse_product(tokens, pos)?;
            }
            Token::Minus => {
                *pos += 1;
                acc -= parse_product(tokens, pos)?;
            }
            _ => break,
        }
    }
    Ok(acc)
}

fn parse_product(tokens: &[Token], pos: &mut usize) -> Result<f64, String> {
    let mut acc = parse_factor(tokens, pos)?;
    while *pos < tokens.len() {
        match tokens[*pos] {
            Token::Star => {
                *pos += 1;
                acc *= parse_factor(tokens, pos)?;
            }
            Token::Slash => {
                *pos += 1;
                acc /= parse_factor(tokens, pos)?;
            }
            _ => break,
        }
    }
    Ok(acc)
}

fn parse_factor(tokens: &[Token], pos: &mut usize) -> Result<f64, String> {
    let mut sign = 1.0;
    while *pos < tokens.len() {
        match tokens[*pos] {
            Token::Minus => {
                sign = -sign;
                *pos += 1;
            }
            Token::Plus => *pos += 1,
            _ => break,
        }
    }
    let base = parse_atom(tokens, pos)?;
    if *pos < tokens.len() && tokens[*pos] == Token::Caret {
        *pos += 1;
        let exponent = parse_factor(tokens, pos)?;
        Ok(sign * base.powf(exponent))
    } else {
        Ok(sign * base)
    }
}

fn parse_atom(tokens: &[Token], pos: &mut usize) -> Result<f64, String> {
    if *pos >= tokens.len() {
        return Err("unexpected end of expression".into());
    }
    match tokens[*pos] {
        Token::Number(v) => {
            *pos += 1;
            Ok(v)
        }
        Token::Pi => {
            *pos += 1;
            Ok(std::f64::consts::PI)
        }
        Token::Open => {
            *pos += 1;
            let inner = parse_sum(tokens, pos)?;
            if *pos >= tokens.len() || tokens[*pos] != Token::Close {
                return Err("missing closing parenthesis".into());
            }
            *pos += 1;
            Ok(inner)
        }
        ref other => Err(format!("unexpected token {other:?}")),
    }
}

// ---------------------------------------------------------------------------
// raw document
// ---------------------------------------------------------------------------

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    symbol: RawSymbol,
    interval: [Expr; 2],
    #[serde(default)]
    scale: Option<Expr>,
    #[serde(default)]
    variants: Option<Vec<String>>,
    #[serde(default)]
    lambda: Option<RawLambda>,
    #[serde(default)]
    grid: Option<RawGrid>,
    #[serde(default)]
    exhaustion: Option<RawExhaustion>,
    #[serde(default)]
    tolerances: Option<RawTolerances>,
    #[serde(default)]
    eigen: Option<RawEigen>,
    #[serde(default)]
    norm: Option<RawNorm>,
    #[serde(default)]
    hypo: Option<RawHypo>,
    #[serde(default)]
    witness: Option<RawWitness>,
    #[serde(default)]
    closure_verify: Option<RawClosureVerify>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSymbol {
    coeffs: Vec<[Expr; 2]>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLambda {
    #[serde(default)]
    grid: Option<RawLambdaGrid>,
    #[serde(default)]
    explicit: Option<Vec<[Expr; 2]>>,
    #[serde(default)]
    dirichlet_eigenvalues: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLambdaGrid {
    re: [Expr; 2],
    im: [Expr; 2],
    n: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    #[serde(default)]
    samples: Option<usize>,
    #[serde(default)]
    padding_fraction: Option<f64>,
    #[serde(default)]
    window: Option<[Expr; 2]>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExhaustion {
    #[serde(default)]
    depth: Option<usize>,
    #[serde(default)]
    closure_rule: Option<bool>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTolerances {
    #[serde(default)]
    rank: Option<f64>,
    #[serde(default)]
    residual: Option<f64>,
    #[serde(default)]
    convergence: Option<f64>,
    #[serde(default)]
    support: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEigen {
    n_max: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNorm {
    function: String,
    s_values: Vec<Expr>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawHypo {
    #[serde(default)]
    xi_max: Option<f64>,
    #[serde(default)]
    samples: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawWitness {
    lambda: Vec<[Expr; 2]>,
    #[serde(default)]
    seminorm_index: Option<usize>,
    #[serde(default)]
    s: Option<Expr>,
    #[serde(default)]
    j_max: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawClosureVerify {
    function: String,
    #[serde(default)]
    s_values: Option<Vec<usize>>,
    #[serde(default)]
    seminorm_index: Option<usize>,
    #[serde(default)]
    j_max: Option<usize>,
    #[serde(default)]
    derivative_order: Option<usize>,
    #[serde(default)]
    trace_order: Option<usize>,
}

// ---------------------------------------------------------------------------
// validated configuration
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct JobConfig {
    pub coeffs: Vec<C64>,
    pub interval: (f64, f64),
    pub scale: f64,
    pub variants: Vec<DomainVariant>,
    pub lambda_samples: Vec<C64>,
    pub grid_samples: usize,
    pub padding_fraction: f64,
    pub window: Option<(f64, f64)>,
    pub exhaustion_depth: usize,
    pub closure_rule: bool,
    pub rank_tol: f64,
    pub residual_tol: f64,
    pub convergence_tol: f64,
    pub support_tol: f64,
    pub eigen_n_max: usize,
    pub norm_function: String,
    pub norm_s_values: Vec<f64>,
    pub hypo_xi_max: f64,
    pub hypo_samples: usize,
    pub witness_lambda: Vec<C64>,
    pub witness_seminorm_index: usize,
    pub witness_s: f64,
    pub witness_j_max: usize,
    pub closure_function: String,
    pub closure_s_values: Vec<usize>,
    pub closure_seminorm_index: usize,
    pub closure_j_max: usize,
    pub closure_derivative_order: usize,
    pub closure_trace_order: usize,
}

impl JobConfig {
    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }
}

fn variant_from_name(name: &str) -> Result<DomainVariant, ConfigError> {
    match name {
        "minimal_support" => Ok(DomainVariant::MinimalSupport),
        "dirichlet_graph" => Ok(DomainVariant::DirichletGraph),
        "closure_local" => Ok(DomainVariant::ClosureLocal),
        "adjoint_compact" => Ok(DomainVariant::AdjointCompact),
        other => Err(invalid(
            "variants",
            format!(
                "unknown variant {other:?}; expected minimal_support, dirichlet_graph, \
                 closure_local or adjoint_compact"
            ),
        )),
    }
}

fn resolve_pair(pair: &[Expr; 2], field: &str) -> Result<C64, ConfigError> {
    Ok(C64::new(
        pair[0].resolve(&format!("{field}[0]"))?,
        pair[1].resolve(&format!("{field}[1]"))?,
    ))
}

/// Parse and validate a configuration document. Deterministic: the same
/// document yields the same configuration, including lambda sample order.
pub fn parse_config(document: &str) -> Result<JobConfig, ConfigError> {
    let raw: RawConfig =
        serde_json::from_str(document).map_err(|e| ConfigError::Parse(e.to_string()))?;

    if raw.symbol.coeffs.is_empty() {
        return Err(invalid(
            "symbol.coeffs",
            "must contain at least one coefficient",
        ));
    }
    let coeffs = raw
        .symbol
        .coeffs
        .iter()
        .enumerate()
        .map(|(k, pair)| resolve_pair(pair, &format!("symbol.coeffs[{k}]")))
        .collect::<Result<Vec<_>, _>>()?;
    let order = coeffs.len() - 1;
    if order >= 1 && coeffs[order].norm() == 0.0 {
        return Err(invalid(
            "symbol.coeffs",
            format!("leading coefficient a_{order} must be nonzero"),
        ));
    }

    let lo = raw.interval[0].resolve("interval[0]")?;
    let hi = raw.interval[1].resolve("interval[1]")?;
    if !(lo.is_finite() && hi.is_finite()) || lo >= hi {
        return Err(invalid(
            "interval",
            "must be a bounded interval with positive length",
        ));
    }

    let scale = match &raw.scale {
        Some(e) => e.resolve("scale")?,
        None => 0.0,
    };

    let variant_names = raw.variants.unwrap_or_else(|| {
        let mut v = vec!["minimal_support".to_string()];
        if order == 2 {
            v.push("dirichlet_graph".to_string());
        }
        v.push("closure_local".to_string());
        v
    });
    let variants = variant_names
        .iter()
        .map(|n| variant_from_name(n))
        .collect::<Result<Vec<_>, _>>()?;
    if variants.contains(&DomainVariant::DirichletGraph) && order != 2 {
        return Err(invalid(
            "variants",
            format!("dirichlet_graph requires a symbol of order 2 (got m = {order})"),
        ));
    }

    // default sampling when the section is absent: a 16x16 grid over
    // [-12,12]^2 plus the explicit Dirichlet eigenvalues for order 2;
    // an explicitly empty section stays empty
    let mut lambda_samples = Vec::new();
    if raw.lambda.is_none() {
        lambda_samples = sobspec_core::spectra::lambda_grid((-12.0, 12.0), (-12.0, 12.0), 16, &[]);
        if order == 2 {
            let length = hi - lo;
            for k in 1..=3usize {
                let l = C64::new(-(std::f64::consts::PI * k as f64 / length).powi(2), 0.0);
                if !lambda_samples.contains(&l) {
                    lambda_samples.push(l);
                }
            }
        }
    }
    if let Some(lambda) = &raw.lambda {
        if let Some(grid) = &lambda.grid {
            if grid.n == 0 {
                return Err(invalid("lambda.grid.n", "must be positive"));
            }
            let re_lo = grid.re[0].resolve("lambda.grid.re[0]")?;
            let re_hi = grid.re[1].resolve("lambda.grid.re[1]")?;
            let im_lo = grid.im[0].resolve("lambda.grid.im[0]")?;
            let im_hi = grid.im[1].resolve("lambda.grid.im[1]")?;
            lambda_samples =
                sobspec_core::spectra::lambda_grid((re_lo, re_hi), (im_lo, im_hi), grid.n, &[]);
        }
        if let Some(explicit) = &lambda.explicit {
            for (i, pair) in explicit.iter().enumerate() {
                let l = resolve_pair(pair, &format!("lambda.explicit[{i}]"))?;
                if !lambda_samples.contains(&l) {
                    lambda_samples.push(l);
                }
            }
        }
        if let Some(n) = lambda.dirichlet_eigenvalues {
            let length = hi - lo;
            for k in 1..=n {
                let l = C64::new(-(std::f64::consts::PI * k as f64 / length).powi(2), 0.0);
                if !lambda_samples.contains(&l) {
                    lambda_samples.push(l);
                }
            }
        }
    }

    let (grid_samples, padding_fraction, window) = match &raw.grid {
        Some(g) => {
            let window = match &g.window {
                Some(w) => {
                    let w_lo = w[0].resolve("grid.window[0]")?;
                    let w_hi = w[1].resolve("grid.window[1]")?;
                    Some((w_lo, w_hi))
                }
                None => None,
            };
            (
                g.samples.unwrap_or(4096),
                g.padding_fraction.unwrap_or(0.25),
                window,
            )
        }
        None => (4096, 0.25, None),
    };
    if !grid_samples.is_power_of_two() || grid_samples < 16 {
        return Err(invalid(
            "grid.samples",
            format!("must be a power of two >= 16 (got {grid_samples})"),
        ));
    }
    if padding_fraction < 0.25 {
        return Err(invalid(
            "grid.padding_fraction",
            "must be at least 0.25 so extensions and mollifications cannot wrap",
        ));
    }

    let (exhaustion_depth, closure_rule) = match &raw.exhaustion {
        Some(e) => (e.depth.unwrap_or(8), e.closure_rule.unwrap_or(true)),
        None => (8, true),
    };
    if exhaustion_depth == 0 {
        return Err(invalid("exhaustion.depth", "must be at least 1"));
    }

    let tol = raw.tolerances.as_ref();
    let rank_tol = tol.and_then(|t| t.rank).unwrap_or(1e-8);
    let residual_tol = tol.and_then(|t| t.residual).unwrap_or(1e-7);
    let convergence_tol = tol.and_then(|t| t.convergence).unwrap_or(1e-3);
    let support_tol = tol.and_then(|t| t.support).unwrap_or(1e-12);
    for (value, field) in [
        (rank_tol, "tolerances.rank"),
        (residual_tol, "tolerances.residual"),
        (convergence_tol, "tolerances.convergence"),
        (support_tol, "tolerances.support"),
    ] {
        if !(value.is_finite() && value > 0.0) {
            return Err(invalid(field, "must be a positive finite number"));
        }
    }

    let eigen_n_max = raw.eigen.as_ref().map(|e| e.n_max).unwrap_or(5);

    let (norm_function, norm_s_values) = match &raw.norm {
        Some(n) => {
            let values = n
                .s_values
                .iter()
                .enumerate()
                .map(|(i, e)| e.resolve(&format!("norm.s_values[{i}]")))
                .collect::<Result<Vec<_>, _>>()?;
            (n.function.clone(), values)
        }
        None => ("gaussian".to_string(), vec![0.0, 1.0]),
    };

    let (hypo_xi_max, hypo_samples) = match &raw.hypo {
        Some(h) => (h.xi_max.unwrap_or(1e3), h.samples.unwrap_or(256)),
        None => (1e3, 256),
    };

    let (witness_lambda, witness_seminorm_index, witness_s, witness_j_max) = match &raw.witness {
        Some(w) => {
            let lambdas = w
                .lambda
                .iter()
                .enumerate()
                .map(|(i, pair)| resolve_pair(pair, &format!("witness.lambda[{i}]")))
                .collect::<Result<Vec<_>, _>>()?;
            let s = match &w.s {
                Some(e) => e.resolve("witness.s")?,
                None => 0.0,
            };
            (
                lambdas,
                w.seminorm_index.unwrap_or(1),
                s,
                w.j_max.unwrap_or(10),
            )
        }
        None => (vec![C64::new(1.0, 0.0)], 1, 0.0, 10),
    };
    if witness_seminorm_index == 0 {
        return Err(invalid("witness.seminorm_index", "indices are 1-based"));
    }

    let (
        closure_function,
        closure_s_values,
        closure_seminorm_index,
        closure_j_max,
        closure_derivative_order,
        closure_trace_order,
    ) = match &raw.closure_verify {
        Some(c) => (
            c.function.clone(),
            c.s_values.clone().unwrap_or_else(|| vec![0]),
            c.seminorm_index.unwrap_or(1),
            c.j_max.unwrap_or(16),
            c.derivative_order.unwrap_or(2),
            c.trace_order.unwrap_or(0),
        ),
        None => ("sin".to_string(), vec![0], 1, 16, 2, 0),
    };
    if closure_trace_order >= closure_derivative_order {
        return Err(invalid(
            "closure_verify.trace_order",
            "must be strictly below derivative_order",
        ));
    }

    Ok(JobConfig {
        coeffs,
        interval: (lo, hi),
        scale,
        variants,
        lambda_samples,
        grid_samples,
        padding_fraction,
        window,
        exhaustion_depth,
        closure_rule,
        rank_tol,
        residual_tol,
        convergence_tol,
        support_tol,
        eigen_n_max,
        norm_function,
        norm_s_values,
        hypo_xi_max,
        hypo_samples,
        witness_lambda,
        witness_seminorm_index,
        witness_s,
        witness_j_max,
        closure_function,
        closure_s_values,
        closure_seminorm_index,
        closure_j_max,
        closure_derivative_order,
        closure_trace_order,
    })
}
