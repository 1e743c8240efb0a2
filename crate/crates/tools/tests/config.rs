use last_core::Mode;
use last_tools::config::{is_override, ConfigError, RunConfig};

fn overrides(list: &[&str]) -> Vec<String> {
    list.iter().map(|s| s.to_string()).collect()
}

#[test]
fn defaults_resolve_to_the_proxy_trainer() {
    let cfg = RunConfig::from_toml("", &[]).unwrap();
    let t = cfg.training_config().unwrap();
    assert_eq!(t.mode, Mode::Last);
    assert_eq!(t.gamma, 0.8);
    assert!((cfg.epsilon() - 8.0 / 255.0).abs() < 1e-15);
    assert!(cfg.to_toml().contains("gamma = 0.8"));
}

#[test]
fn unknown_keys_are_rejected() {
    assert!(matches!(RunConfig::from_toml("[train]\ngama = 0.5\n", &[]), Err(ConfigError::Parse(_))));
    assert!(matches!(RunConfig::from_toml("[nope]\nx = 1\n", &[]), Err(ConfigError::Parse(_))));
}

#[test]
fn overrides_beat_file_values() {
    let cfg = RunConfig::from_toml(
        "[train]\nepochs = 3\n",
        &overrides(&["--train.epochs=5", "--attack.epsilon=16/255", "--train.mode=sat", "--model.hidden=[8, 4]"]),
    )
    .unwrap();
    assert_eq!(cfg.train.epochs, 5);
    assert!((cfg.epsilon() - 16.0 / 255.0).abs() < 1e-15);
    assert_eq!(cfg.training_config().unwrap().mode, Mode::Sat);
    assert_eq!(cfg.model.hidden, vec![8, 4]);
}

#[test]
fn invalid_values_are_config_errors() {
    for bad in ["--train.gamma=0", "--train.gamma=1.5", "--attack.epsilon=-1", "--eval.attacks=[\"bogus\"]", "--landscape.resolution=0"] {
        let err = RunConfig::from_toml("", &overrides(&[bad])).unwrap_err();
        assert!(matches!(err, ConfigError::Invalid(_) | ConfigError::Parse(_)), "{bad}: {err}");
    }
}

#[test]
fn override_syntax() {
    assert!(is_override("--train.epochs=3"));
    assert!(!is_override("--out=x"));
    assert!(!is_override("--train.epochs"));
    assert!(!is_override("train"));
}

#[test]
fn resolved_config_reparses_to_itself() {
    let cfg = RunConfig::from_toml("", &overrides(&["--sd.enabled=true", "--train.mode=sat+swa"])).unwrap();
    assert_eq!(RunConfig::from_toml(&cfg.to_toml(), &[]).unwrap(), cfg);
}

#[test]
fn named_attacks_take_an_optional_radius() {
    let cfg = RunConfig::from_toml("", &[]).unwrap();
    let (_, a) = cfg.named_attack("pgd50:0.1").unwrap();
    assert_eq!((a.epsilon, a.steps, a.restarts), (0.1, 50, 10));
    let (_, c) = cfg.named_attack("clean").unwrap();
    assert_eq!(c.epsilon, 0.0);
    assert!(cfg.named_attack("pgd7").is_err());
}
