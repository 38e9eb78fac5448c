"""Campaign configuration, scans, reports, the acceptance suite and the CLI."""
