import sys
from cowbound import main
sys.exit(main())
