use std::fs;
use std::process::Command;

use parabolic_lab::io::{read_ensemble, read_grid, write_grid};

#[test]
fn pde_solution_file_reloads_and_matches_the_profile() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("pde.toml");
    fs::write(
        &cfg,
        "[experiment]\nkind = \"pde\"\nhalf_width = 2.0\nh = 0.25\ndt = 0.0625\nt_final = 0.5\n[experiment.field]\nname = \"identity\"\nd = 2\n",
    )
    .unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_parabolic"))
        .args([
            "pde",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            dir.path().join("runs").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let run = fs::read_dir(dir.path().join("runs"))
        .unwrap()
        .next()
        .unwrap()
        .unwrap()
        .path();

    let u = read_grid(&run.join("solution.json")).unwrap();
    assert_eq!((u.d(), u.space.nx[0], u.space.nx[1]), (2, 16, 16));
    assert!(u.values().iter().all(|v| v.is_finite() && *v >= 0.0));
    assert!(u.values().iter().any(|v| *v > 0.0));

    let copy = dir.path().join("copy.json");
    write_grid(&u, &copy).unwrap();
    assert_eq!(
        fs::read(run.join("solution.bin")).unwrap(),
        fs::read(dir.path().join("copy.bin")).unwrap()
    );

    let mut profile = csv::Reader::from_path(run.join("final_profile.csv")).unwrap();
    let last = u.time.nt - 1;
    let rows: Vec<f64> = profile
        .records()
        .map(|r| r.unwrap().iter().next_back().unwrap().parse().unwrap())
        .collect();
    assert_eq!(rows.len(), u.nspace());
    assert!(rows.iter().enumerate().all(|(i, v)| *v == u.get(last, i)));
}

#[test]
fn exported_paths_start_at_the_initial_point() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sde.toml");
    fs::write(
        &cfg,
        "seed = 5\n[experiment]\nkind = \"sde\"\nx0 = [0.5, -0.5]\nt_final = 0.1\ndt = 0.01\nn_paths = 7\nexport_paths = true\n[experiment.family]\nname = \"brownian\"\nd = 2\n",
    )
    .unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_parabolic"))
        .args([
            "sde",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            dir.path().join("runs").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let run = fs::read_dir(dir.path().join("runs"))
        .unwrap()
        .next()
        .unwrap()
        .unwrap()
        .path();
    let (h, paths) = read_ensemble(&run.join("paths.json")).unwrap();
    assert_eq!(
        (h.seed, h.n_paths, h.d, h.nt, h.family_tag.as_str()),
        (5, 7, 2, 10, "brownian")
    );
    for i in 0..h.n_paths {
        let start = i * (h.nt + 1) * h.d;
        assert_eq!(&paths[start..start + 2], &[0.5, -0.5]);
    }
}
