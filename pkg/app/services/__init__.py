# Services package



