//! Inputs shared by the `engine` benchmarks.

use psaudit::io::{render_model_output, to_simplified, SimplifiedAnalysis};
use psaudit::{analyze, SourceScript};

/// A script of `functions` small advanced functions, each tripping a few rules.
pub fn sample_script(functions: usize) -> String {
    let mut s = String::new();
    for i in 0..functions {
        s.push_str(&format!(
            "function Get-Item{i}s {{\n    [CmdletBinding()]\n    param([string]$Password, $Unused{i})\n    gci C:\\Temp | % {{ $_.Name }}\n    Write-Host \"item {i}\"\n    $global:last = {i}\n    try {{ Invoke-Expression $Password }} catch {{ }}\n}}\n\n"
        ));
    }
    s
}

/// The same script with every finding repaired by hand.
pub fn sample_fixed(functions: usize) -> String {
    let mut s = String::new();
    for i in 0..functions {
        s.push_str(&format!(
            "function Get-Item{i} {{\n    [CmdletBinding()]\n    param([securestring]$Secret)\n    Get-ChildItem C:\\Temp | ForEach-Object {{ $_.Name }}\n    Write-Output \"item {i} $Secret\"\n}}\n\n"
        ));
    }
    s
}

pub fn sample_analysis(functions: usize) -> SimplifiedAnalysis {
    let script = SourceScript::new("bench.ps1", sample_script(functions));
    to_simplified(&analyze(&script), "bench.ps1")
}

/// A model output that reproduces the ground truth exactly.
pub fn perfect_output(functions: usize) -> String {
    render_model_output(&sample_analysis(functions), &sample_fixed(functions))
}
