"""Settings, logging, errors and physical constants."""
