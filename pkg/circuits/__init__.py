# circuits package
