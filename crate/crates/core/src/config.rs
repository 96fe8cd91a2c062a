//! Flat `key = value` configuration files covering the analytic oracle and
//! the characterizer settings.

use crate::characterize::CharConfig;
use crate::error::ParseError;
use crate::oracle::AnalyticParams;

/// Combined tool configuration with reference defaults.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ToolConfig {
    pub analytic: AnalyticParams,
    pub characterizer: CharConfig,
}

impl ToolConfig {
    /// Parses `key = value` lines; `#` starts a comment. Every key is
    /// optional and falls back to the reference defaults; unknown or
    /// repeated keys are rejected with their line number.
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let mut cfg = ToolConfig::default();
        let mut seen = std::collections::HashSet::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap().trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| ParseError::new(line, "expected key = value"))?;
            let key = key.trim();
            let value = value.trim();
            if !seen.insert(key.to_string()) {
                return Err(ParseError::new(line, format!("repeated key '{key}'")));
            }
            let number = || -> Result<f64, ParseError> {
                value
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| ParseError::new(line, format!("malformed number '{value}'")))
            };
            match key {
                "d0" => cfg.analytic.d0 = number()?,
                "amp_s" => cfg.analytic.amp_s = number()?,
                "amp_h" => cfg.analytic.amp_h = number()?,
                "tau_s" => cfg.analytic.tau_s = number()?,
                "tau_h" => cfg.analytic.tau_h = number()?,
                "f_bar" => cfg.analytic.f_bar = number()?,
                "domain_max" => cfg.analytic.domain_max = number()?,
                "anchor_slack" => cfg.characterizer.anchor_slack = number()?,
                "k_th" => cfg.characterizer.k_th = number()?,
                "d_th" => cfg.characterizer.d_th = number()?,
                "search_resolution" => cfg.characterizer.search_resolution = number()?,
                "stable_step" => cfg.characterizer.stable_step = number()?,
                "stable_epsilon" => cfg.characterizer.stable_epsilon = number()?,
                "max_split_depth" => {
                    cfg.characterizer.max_split_depth = value.parse::<usize>().map_err(|_| {
                        ParseError::new(line, format!("malformed integer '{value}'"))
                    })?
                }
                other => {
                    return Err(ParseError::new(line, format!("unknown key '{other}'")));
                }
            }
        }
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_without_any_keys() {
        let cfg = ToolConfig::parse("# nothing here\n").unwrap();
        assert_eq!(cfg, ToolConfig::default());
    }

    #[test]
    fn overrides_apply() {
        let cfg = ToolConfig::parse("d0 = 50\nd_th = 1.5 # tighter\nmax_split_depth = 9\n").unwrap();
        assert_eq!(cfg.analytic.d0, 50.0);
        assert_eq!(cfg.characterizer.d_th, 1.5);
        assert_eq!(cfg.characterizer.max_split_depth, 9);
        assert_eq!(cfg.analytic.f_bar, 200.0);
    }

    #[test]
    fn unknown_key_reports_line() {
        let err = ToolConfig::parse("d0 = 50\nbogus = 1\n").unwrap_err();
        assert_eq!(err.line, 2);
        assert!(err.message.contains("bogus"));
    }

    #[test]
    fn repeated_key_rejected() {
        let err = ToolConfig::parse("d0 = 50\nd0 = 60\n").unwrap_err();
        assert_eq!(err.line, 2);
    }

    #[test]
    fn malformed_number_rejected() {
        let err = ToolConfig::parse("tau_s = fast\n").unwrap_err();
        assert!(err.message.contains("malformed number"));
    }
}
