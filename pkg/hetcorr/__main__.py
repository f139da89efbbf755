from __future__ import annotations

from hetcorr.main import main

raise SystemExit(main())
