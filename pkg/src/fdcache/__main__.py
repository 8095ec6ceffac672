from fdcache.cli import main

raise SystemExit(main())
