"""Run orchestration, checkpoints, reports and the verification suite."""
