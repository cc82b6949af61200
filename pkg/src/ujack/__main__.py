from ujack.cli import main

main()
