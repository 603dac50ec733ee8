# Test package for soi-entangle
