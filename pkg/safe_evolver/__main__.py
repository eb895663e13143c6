from safe_evolver.cli import main

if __name__ == '__main__':
    main()
