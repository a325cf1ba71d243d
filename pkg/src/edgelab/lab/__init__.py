"""Scenarios, ladder experiments and report rendering."""
from .experiments import EXPERIMENTS, ExperimentReport, Verdict, decays, run_experiment
from .report import emit_report, report_csv, report_json, report_svg
from .scenarios import PRESETS, Scenario, generate_scenario, preset
