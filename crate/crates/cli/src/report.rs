use crate::Common;
use std::fmt::Display;

const ENV_VARS: [&str; 11] = [
    "EIGCANON_EPS_EIG",
    "EIGCANON_EPS_RANK",
    "EIGCANON_EPS_ZERO",
    "EIGCANON_TAU",
    "EIGCANON_C",
    "EIGCANON_SEED",
    "EIGCANON_JOBS",
    "EIGCANON_METHOD",
    "EIGCANON_VARIANT",
    "EIGCANON_TRIALS",
    "EIGCANON_BUDGET",
];

/// Line-delimited `key=value` report whose header echoes the effective configuration.
pub struct Report {
    header: String,
    body: String,
}

impl Report {
    pub fn new(command: &str, common: &Common) -> Self {
        let mut r = Self {
            header: format!("# eigcanon {command}\n"),
            body: String::new(),
        };
        r.config("eps_eig", format!("{:e}", common.eps_eig));
        r.config("eps_rank", format!("{:e}", common.eps_rank));
        r.config("eps_zero", format!("{:e}", common.eps_zero));
        r.config("tau", format!("{:e}", common.tau_quant));
        r.config("c", common.c);
        r.config("seed", common.seed);
        for var in ENV_VARS {
            if let Ok(v) = std::env::var(var) {
                r.header.push_str(&format!("config.env.{var}={v}\n"));
            }
        }
        r
    }

    pub fn config(&mut self, key: &str, value: impl Display) {
        self.header.push_str(&format!("config.{key}={value}\n"));
    }

    pub fn line(&mut self, key: &str, value: impl Display) {
        self.body.push_str(&format!("{key}={value}\n"));
    }

    pub fn raw(&mut self, text: &str) {
        self.body.push_str(text);
    }

    pub fn finish(self) -> String {
        self.header + &self.body
    }
}
