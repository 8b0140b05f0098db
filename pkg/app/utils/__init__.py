# Utils package



