//! Seeded synthetic data in the supported input formats, for tests, demos
//! and benchmarks.
//!
//! The KDD-shaped generator mimics the gross structure of connection
//! records (a few large, internally homogeneous attack families plus more
//! varied normal traffic); it is not a substitute for real captures.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal};

pub const KDD_EXAMPLE_NORMAL: &str = "0,tcp,http,SF,181,5450,0,0,0,0,0,1,0,0,0,0,0,0,0,0,0,0,8,8,0.00,0.00,0.00,0.00,1.00,0.00,0.00,9,9,1.00,0.00,0.11,0.00,0.00,0.00,0.00,0.00,normal.";
pub const KDD_EXAMPLE_ATTACK: &str = "0,udp,private,SF,105,146,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,1,1,0.00,0.00,0.00,0.00,1.00,0.00,0.00,255,254,1.00,0.01,0.00,0.00,0.00,0.00,0.00,0.00,teardrop.";
pub const APACHE_EXAMPLE_LINE: &str = r#"127.0.0.1 - - [01/January/2012:00:00:01 +0300] "GET /resource.php?parameter1=value1&parameter2=value2 HTTP/1.1" 200 2680 "http://www.address.com/webpage.html" "Mozilla/5.0 (SymbianOS/9.2;...)""#;

/// Two isotropic Gaussian blobs in the plane; returns points and blob index.
pub fn two_blobs(
    sizes: [usize; 2],
    centers: [(f64, f64); 2],
    sigma: f64,
    seed: u64,
) -> (Array2<f64>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, sigma).unwrap();
    let n = sizes[0] + sizes[1];
    let mut x = Array2::zeros((n, 2));
    let mut truth = Vec::with_capacity(n);
    for i in 0..n {
        let b = (i >= sizes[0]) as usize;
        x[[i, 0]] = centers[b].0 + noise.sample(&mut rng);
        x[[i, 1]] = centers[b].1 + noise.sample(&mut rng);
        truth.push(b);
    }
    (x, truth)
}

/// Points as CSV with columns `x,y[,label]`; labels are `a` and `b`.
pub fn blobs_csv(x: &Array2<f64>, truth: Option<&[usize]>) -> String {
    let mut s = String::from(if truth.is_some() { "x,y,label\n" } else { "x,y\n" });
    for i in 0..x.nrows() {
        s.push_str(&format!("{},{}", x[[i, 0]], x[[i, 1]]));
        if let Some(t) = truth {
            s.push_str(if t[i] == 0 { ",a" } else { ",b" });
        }
        s.push('\n');
    }
    s
}

/// Connection families produced by [`kdd_lines`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Normal,
    Smurf,
    Neptune,
    PortSweep,
    Teardrop,
}

impl Family {
    pub fn label(self) -> &'static str {
        match self {
            Family::Normal => "normal",
            Family::Smurf => "smurf",
            Family::Neptune => "neptune",
            Family::PortSweep => "portsweep",
            Family::Teardrop => "teardrop",
        }
    }

    pub fn is_attack(self) -> bool {
        self != Family::Normal
    }
}

/// Roughly the class balance of the 10% KDD training file.
pub const KDD_MIX: [(Family, f64); 5] = [
    (Family::Smurf, 0.56),
    (Family::Neptune, 0.22),
    (Family::Normal, 0.20),
    (Family::PortSweep, 0.01),
    (Family::Teardrop, 0.01),
];

fn pick<R: Rng>(rng: &mut R, items: &[&'static str]) -> &'static str {
    items[rng.random_range(0..items.len())]
}

fn rate<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    (rng.random_range(lo..=hi) * 100.0).round() / 100.0
}

fn record<R: Rng>(rng: &mut R, family: Family) -> String {
    // 41 values in file order, filled per family
    let mut ints = [0i64; 41];
    let mut rates = [0f64; 41];
    let (proto, service, flag);
    match family {
        Family::Normal => {
            proto = "tcp";
            service = pick(rng, &["http", "http", "http", "smtp", "ftp_data", "domain_u"]);
            flag = if rng.random_bool(0.97) { "SF" } else { "REJ" };
            ints[4] = LogNormal::new(5.5, 0.8).unwrap().sample(rng) as i64;
            ints[5] = LogNormal::new(7.5, 1.2).unwrap().sample(rng) as i64;
            ints[11] = 1;
            ints[22] = rng.random_range(1..20);
            ints[23] = ints[22] + rng.random_range(0..10);
            rates[28] = rate(rng, 0.8, 1.0);
            rates[29] = rate(rng, 0.0, 0.1);
            rates[30] = rate(rng, 0.0, 0.3);
            ints[31] = rng.random_range(1..256);
            ints[32] = rng.random_range(1..256);
            rates[33] = rate(rng, 0.5, 1.0);
            rates[34] = rate(rng, 0.0, 0.1);
            rates[35] = rate(rng, 0.0, 0.2);
            rates[36] = rate(rng, 0.0, 0.1);
        }
        Family::Smurf => {
            proto = "icmp";
            service = "ecr_i";
            flag = "SF";
            ints[4] = *[520, 1032].get(rng.random_range(0..2)).unwrap();
            ints[22] = rng.random_range(480..512);
            ints[23] = ints[22];
            rates[28] = 1.0;
            ints[31] = 255;
            ints[32] = 255;
            rates[33] = 1.0;
            rates[35] = 1.0;
        }
        Family::Neptune => {
            proto = "tcp";
            service = pick(rng, &["private", "private", "http", "telnet"]);
            flag = "S0";
            ints[22] = rng.random_range(100..300);
            ints[23] = rng.random_range(1..20);
            rates[24] = 1.0;
            rates[25] = 1.0;
            rates[28] = rate(rng, 0.0, 0.1);
            rates[29] = rate(rng, 0.05, 0.1);
            ints[31] = 255;
            ints[32] = rng.random_range(1..20);
            rates[33] = rate(rng, 0.0, 0.1);
            rates[34] = rate(rng, 0.05, 0.1);
            rates[37] = 1.0;
            rates[38] = 1.0;
        }
        Family::PortSweep => {
            proto = "tcp";
            service = "private";
            flag = pick(rng, &["REJ", "RSTO"]);
            ints[0] = rng.random_range(0..3);
            ints[22] = rng.random_range(1..3);
            ints[23] = 1;
            rates[26] = 1.0;
            rates[27] = 1.0;
            rates[28] = 1.0;
            ints[31] = rng.random_range(1..100);
            ints[32] = 1;
            rates[34] = rate(rng, 0.5, 1.0);
            rates[39] = 1.0;
            rates[40] = 1.0;
        }
        Family::Teardrop => {
            proto = "udp";
            service = "private";
            flag = "SF";
            ints[4] = 28;
            ints[7] = 3;
            ints[22] = rng.random_range(1..60);
            ints[23] = ints[22];
            rates[28] = 1.0;
            ints[31] = 255;
            ints[32] = rng.random_range(1..255);
            rates[33] = 1.0;
            rates[35] = rate(rng, 0.0, 1.0);
        }
    }
    let mut fields: Vec<String> = Vec::with_capacity(42);
    for j in 0..41 {
        fields.push(match j {
            1 => proto.into(),
            2 => service.into(),
            3 => flag.into(),
            24..=30 | 33..=40 => format!("{:.2}", rates[j]),
            _ => ints[j].to_string(),
        });
    }
    fields.push(format!("{}.", family.label()));
    fields.join(",")
}

/// `n` labeled KDD-format lines drawn from `mix` (weights need not sum to 1).
pub fn kdd_lines(n: usize, mix: &[(Family, f64)], seed: u64) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total: f64 = mix.iter().map(|m| m.1).sum();
    (0..n)
        .map(|_| {
            let mut u = rng.random::<f64>() * total;
            let mut family = mix[mix.len() - 1].0;
            for &(f, w) in mix {
                if u < w {
                    family = f;
                    break;
                }
                u -= w;
            }
            record(&mut rng, family)
        })
        .collect()
}

const PAGES: [&str; 6] = [
    "/index.php",
    "/resource.php?parameter1=value1&parameter2=value2",
    "/images/logo.png",
    "/news/article.php?id=42",
    "/search.php?q=weather",
    "/css/style.css",
];

const INJECTIONS: [&str; 4] = [
    "/resource.php?parameter1=%27%20OR%201=1--",
    "/../../../../etc/passwd",
    "/search.php?q=<script>alert(document.cookie)</script>",
    "/cgi-bin/php?-d+allow_url_include=on+-d+auto_prepend_file=php://input",
];

/// Combined-format access log lines; returns the lines and whether each one
/// carries an injected anomalous request.
pub fn apache_lines(n: usize, anomaly_rate: f64, seed: u64) -> (Vec<String>, Vec<bool>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut lines = Vec::with_capacity(n);
    let mut flags = Vec::with_capacity(n);
    for i in 0..n {
        let bad = rng.random_bool(anomaly_rate);
        let path = if bad { pick(&mut rng, &INJECTIONS) } else { pick(&mut rng, &PAGES) };
        let method = if !bad && rng.random_bool(0.1) { "POST" } else { "GET" };
        let status = if bad { 404 } else { 200 };
        lines.push(format!(
            "10.0.{}.{} - - [01/January/2012:00:{:02}:{:02} +0300] \"{method} {path} HTTP/1.1\" {status} {} \"http://www.address.com/webpage.html\" \"Mozilla/5.0 (X11; Linux x86_64)\"",
            rng.random_range(0..4),
            rng.random_range(1..255),
            (i / 60) % 60,
            i % 60,
            rng.random_range(200..9000),
        ));
        flags.push(bad);
    }
    (lines, flags)
}
