from rocrecal.cli import main

main()
