"""
Backend services shared by the model and the controllers: the EventHub subject,
the CSV codec, the model record store and the atomic output writer.
"""
