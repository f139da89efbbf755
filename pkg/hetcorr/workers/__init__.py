"""Process pool helpers."""
