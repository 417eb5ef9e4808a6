"""Pulse-level control framework with a transmon emulator."""
