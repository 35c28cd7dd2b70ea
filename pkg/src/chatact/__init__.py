"""chatact: dialogue-act labeling and team-communication analytics for
software-team chat transcripts."""

__version__ = "0.1.0"
