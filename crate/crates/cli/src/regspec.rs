//! Parser for `--reg` values such as `global:c=9,kind=sym_normalized_self_loop`.

use std::collections::BTreeMap;
use std::path::Path;

use graphden::denoise::RegularizerSpec;
use graphden::LaplacianKind;

fn parse_kind(s: &str) -> Result<LaplacianKind, String> {
    match s {
        "unnormalized" => Ok(LaplacianKind::Unnormalized),
        "unnormalized_self_loop" | "self_loop" => Ok(LaplacianKind::UnnormalizedSelfLoop),
        "sym_normalized_self_loop" | "sym" => Ok(LaplacianKind::SymNormalizedSelfLoop),
        other => Err(format!(
            "unknown Laplacian kind `{other}` (unnormalized, unnormalized_self_loop, sym_normalized_self_loop)"
        )),
    }
}

fn read_weights(path: &Path, n: usize) -> Result<Vec<f64>, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("reading {}: {e}", path.display()))?;
    let c: Vec<f64> = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, l)| l.trim().parse::<f64>().map_err(|_| format!("{}:{}: bad weight `{l}`", path.display(), i + 1)))
        .collect::<Result<_, _>>()?;
    if c.len() != n {
        return Err(format!("{} lists {} weights for {n} nodes", path.display(), c.len()));
    }
    Ok(c)
}

/// Parses `name:key=value,...`. Per-node weights take `c=<value>` (constant)
/// or `file=<path>` (one value per line).
pub fn parse_regularizer(spec: &str, num_nodes: usize) -> Result<RegularizerSpec, String> {
    let (name, args) = spec.split_once(':').unwrap_or((spec, ""));
    let mut kv = BTreeMap::new();
    for part in args.split(',').filter(|p| !p.is_empty()) {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| format!("expected key=value in `{part}`"))?;
        kv.insert(k.trim().to_string(), v.trim().to_string());
    }
    let mut take = |key: &str| kv.remove(key);
    let real = |key: &str, v: Option<String>| -> Result<f64, String> {
        let v = v.ok_or_else(|| format!("`{name}` needs `{key}=`"))?;
        v.parse::<f64>().map_err(|_| format!("`{key}` must be a number, got `{v}`"))
    };
    let per_node = |c: Option<String>, file: Option<String>| -> Result<Vec<f64>, String> {
        match (c, file) {
            (Some(c), None) => Ok(vec![real("c", Some(c))?; num_nodes]),
            (None, Some(f)) => read_weights(Path::new(&f), num_nodes),
            _ => Err(format!("`{name}` needs exactly one of `c=` or `file=`")),
        }
    };
    let spec = match name {
        "global" => RegularizerSpec::GlobalLaplacian {
            c: real("c", take("c"))?,
            kind: match take("kind") {
                Some(k) => parse_kind(&k)?,
                None => LaplacianKind::SymNormalizedSelfLoop,
            },
        },
        "node" => RegularizerSpec::NodeAdaptive {
            c: per_node(take("c"), take("file"))?,
        },
        "degnorm" => RegularizerSpec::DegreeNormalizedAdaptive {
            c: per_node(take("c"), take("file"))?,
        },
        "pairnorm" => RegularizerSpec::PairNorm {
            cp: real("cp", take("cp"))?,
            cn: real("cn", take("cn"))?,
        },
        "dropedge" => RegularizerSpec::DropEdge {
            q: real("q", take("q"))?,
            seed: match take("seed") {
                Some(s) => s.parse().map_err(|_| format!("`seed` must be an integer, got `{s}`"))?,
                None => 0,
            },
        },
        "trend" => RegularizerSpec::TrendFilter {
            c: real("c", take("c"))?,
        },
        other => {
            return Err(format!(
                "unknown regularizer `{other}` (global, node, degnorm, pairnorm, dropedge, trend)"
            ))
        }
    };
    if let Some(k) = kv.keys().next() {
        return Err(format!("unexpected key `{k}` for `{name}`"));
    }
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_each_variant() {
        assert_eq!(
            parse_regularizer("global:c=9", 3).unwrap(),
            RegularizerSpec::GlobalLaplacian {
                c: 9.0,
                kind: LaplacianKind::SymNormalizedSelfLoop
            }
        );
        assert_eq!(
            parse_regularizer("global:c=1,kind=unnormalized", 3).unwrap(),
            RegularizerSpec::GlobalLaplacian {
                c: 1.0,
                kind: LaplacianKind::Unnormalized
            }
        );
        assert_eq!(
            parse_regularizer("degnorm:c=2", 2).unwrap(),
            RegularizerSpec::DegreeNormalizedAdaptive { c: vec![2.0, 2.0] }
        );
        assert_eq!(
            parse_regularizer("dropedge:q=0.3,seed=4", 2).unwrap(),
            RegularizerSpec::DropEdge { q: 0.3, seed: 4 }
        );
        assert_eq!(parse_regularizer("trend:c=1", 2).unwrap(), RegularizerSpec::TrendFilter { c: 1.0 });
    }

    #[test]
    fn rejects_malformed() {
        assert!(parse_regularizer("global", 3).is_err());
        assert!(parse_regularizer("global:c=x", 3).is_err());
        assert!(parse_regularizer("global:c=1,extra=2", 3).is_err());
        assert!(parse_regularizer("node:c=1,file=a", 3).is_err());
        assert!(parse_regularizer("wavelet:c=1", 3).is_err());
    }

    #[test]
    fn reads_weight_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.txt");
        std::fs::write(&path, "1\n0.5\n2\n").unwrap();
        let spec = parse_regularizer(&format!("node:file={}", path.display()), 3).unwrap();
        assert_eq!(spec, RegularizerSpec::NodeAdaptive { c: vec![1.0, 0.5, 2.0] });
        assert!(parse_regularizer(&format!("node:file={}", path.display()), 4).is_err());
    }
}
